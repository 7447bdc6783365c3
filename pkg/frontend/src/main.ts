/** Entry point: tab chrome plus one controller per tool.
 *
 * The service base URL is configurable at runtime via
 * `window.TRIPMILL_API_BASE` (default: same origin).
 */

import { ApiClient } from "./api.js";
import { OdViewController } from "./odView.js";
import { SpeedViewController } from "./speedView.js";

declare global {
  interface Window {
    TRIPMILL_API_BASE?: string;
  }
}

export function bootstrap(root: HTMLElement, baseUrl: string): void {
  root.innerHTML = `
    <nav class="tabs">
      <button class="tab on" data-tab="speed">Roadway speeds</button>
      <button class="tab" data-tab="od">Trips by zip</button>
    </nav>
    <main>
      <div id="speed-root"></div>
      <div id="od-root" hidden></div>
    </main>`;

  const client = new ApiClient(baseUrl);
  const speedRoot = root.querySelector<HTMLElement>("#speed-root")!;
  const odRoot = root.querySelector<HTMLElement>("#od-root")!;
  const speed = new SpeedViewController(speedRoot, client);
  const od = new OdViewController(odRoot, client);
  void speed.init();
  let odStarted = false;

  root.querySelector(".tabs")!.addEventListener("click", (ev) => {
    const button = (ev.target as HTMLElement).closest<HTMLElement>("[data-tab]");
    if (!button) return;
    for (const tab of root.querySelectorAll(".tab")) {
      tab.classList.toggle("on", tab === button);
    }
    const showSpeed = button.dataset["tab"] === "speed";
    speedRoot.hidden = !showSpeed;
    odRoot.hidden = showSpeed;
    if (!showSpeed && !odStarted) {
      odStarted = true;
      void od.init();
    }
  });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap(document.getElementById("app")!, window.TRIPMILL_API_BASE ?? "");
}
