import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { SpeedViewController, renderSpeedView } from "../src/speedView.js";
import type { RouteSegmentsResponse, SpeedDistributionResponse } from "../src/types.js";
import { FakeSpeedApi, container, emptyHour, golden } from "./helpers.js";

const DEBOUNCE = 100;

async function makeController() {
  const api = new FakeSpeedApi();
  const controller = new SpeedViewController(container(), api, DEBOUNCE);
  await controller.init();
  return { api, controller };
}

async function flush(controller: SpeedViewController) {
  await vi.advanceTimersByTimeAsync(DEBOUNCE + 20);
  await controller.settled();
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
  document.body.innerHTML = "";
});

describe("SpeedViewController", () => {
  it("initial load renders the histogram with the response's bin values", async () => {
    const { controller } = await makeController();
    const dist = golden<SpeedDistributionResponse>("speed_default");
    const bars = [...document.querySelectorAll(".hist-bar")];
    expect(bars.map((b) => Number(b.getAttribute("data-count")))).toEqual(
      dist.bins.map((b) => b.count),
    );
    // the controller selects the first segment of the loaded route
    const segments = golden<RouteSegmentsResponse>("route_segments").segments;
    expect(controller.state.wayId).toBe(segments[0].way_id);
    expect(document.querySelector(".metrics-table")).not.toBeNull();
    expect(document.querySelector(".day-hour-grid")).not.toBeNull();
    expect(document.querySelector(".route-map")).not.toBeNull();
  });

  it("changing the hour filter issues exactly one refetch and rerender", async () => {
    const { api, controller } = await makeController();
    const distCallsBefore = api.calls.dist;
    const rendersBefore = controller.renderCount;

    controller.handleAction("toggle-hour", "7");
    expect(api.calls.dist).toBe(distCallsBefore); // nothing until the debounce fires
    await flush(controller);

    expect(api.calls.dist).toBe(distCallsBefore + 1);
    expect(api.calls.overview).toBe(1); // untouched endpoint not refetched
    expect(api.calls.segments).toBe(1);
    // one immediate selector rerender plus one data rerender
    expect(controller.renderCount).toBe(rendersBefore + 2);
  });

  it("a burst of toggles coalesces into one request", async () => {
    const { api, controller } = await makeController();
    const before = api.calls.dist;
    controller.handleAction("toggle-hour", "7");
    controller.handleAction("toggle-hour", "8");
    controller.handleAction("toggle-day", "sat");
    await flush(controller);
    expect(api.calls.dist).toBe(before + 1);
  });

  it("shows the empty-distribution state for a no-data filter", async () => {
    const { controller } = await makeController();
    // reduce the hour selection to exactly the fixture's empty hour
    const keep = emptyHour();
    for (let h = 0; h < 24; h++) {
      if (h !== keep) controller.handleAction("toggle-hour", String(h));
    }
    await flush(controller);
    expect(controller.data.dist?.total_traversals).toBe(0);
    expect(document.querySelector(".empty-state")).not.toBeNull();
    expect(document.querySelector(".hist-bar")).toBeNull();
    expect(document.querySelector("[data-marker]")).toBeNull();
  });

  it("switching the overview metric refetches only /overview, once", async () => {
    const { api, controller } = await makeController();
    const overviewBefore = api.calls.overview;
    const distBefore = api.calls.dist;
    controller.handleAction("select-metric", "p95");
    await flush(controller);
    expect(api.calls.overview).toBe(overviewBefore + 1);
    expect(api.calls.dist).toBe(distBefore);
    expect(controller.data.overview?.metric).toBe("p95");
  });

  it("service errors render an inline panel and preserve state", async () => {
    const { api, controller } = await makeController();
    const staleDist = controller.data.dist;
    api.failNext = true;
    controller.handleAction("toggle-hour", "9");
    await flush(controller);
    expect(document.querySelector(".error-panel")).not.toBeNull();
    expect(controller.state.hours.has(9)).toBe(false); // selection kept
    expect(controller.data.dist).toBe(staleDist); // last good data retained
  });

  it("clicks on rendered controls dispatch through data-action attributes", async () => {
    const { api, controller } = await makeController();
    const before = api.calls.dist;
    const button = document.querySelector<HTMLElement>(
      '[data-action="toggle-hour"][data-value="5"]',
    )!;
    button.click();
    await flush(controller);
    expect(api.calls.dist).toBe(before + 1);
    expect(controller.state.hours.has(5)).toBe(false);
  });

  it("keeps at least one day and one hour selected", async () => {
    const { controller } = await makeController();
    for (const day of ["mon", "tue", "wed", "thu", "fri", "sat", "sun"]) {
      controller.handleAction("toggle-day", day);
    }
    expect(controller.state.days.size).toBe(1);
  });
});

describe("renderSpeedView purity", () => {
  it("identical state and data produce an identical render tree", async () => {
    const { controller } = await makeController();
    const first = renderSpeedView(controller.state, controller.data);
    const second = renderSpeedView(controller.state, controller.data);
    expect(second).toBe(first);
  });
});
