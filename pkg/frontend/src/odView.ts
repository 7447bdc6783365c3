/** Zip-level origin-destination tool: a zip/hour/day/direction selection
 * drives a regional heat panel and a descending trips/percent bar chart.
 */

import { esc, odBarChartHtml, zipHeatSvg } from "./charts.js";
import { DirtySetDebouncer } from "./debounce.js";
import { DAY_KEYS } from "./types.js";
import type { DayKey, OdApi, OdResponse, ZipInfo } from "./types.js";

export interface OdViewState {
  zip: string | null;
  direction: "origin" | "destination";
  includeIntra: boolean;
  days: Set<DayKey>;
  hours: Set<number>;
}

export interface OdViewData {
  zips: ZipInfo[];
  od: OdResponse | null;
  error: string | null;
}

function toggle(action: string, value: string, on: boolean, label: string): string {
  return (
    `<button class="toggle${on ? " on" : ""}" data-action="${action}" data-value="${esc(value)}">` +
    `${esc(label)}</button>`
  );
}

export function renderOdView(state: OdViewState, data: OdViewData): string {
  const parts: string[] = ['<section class="od-view">'];
  parts.push('<div class="selectors">');
  const zipOptions = data.zips
    .map(
      (z) =>
        `<option value="${esc(z.postal_code)}"${z.postal_code === state.zip ? " selected" : ""}>` +
        `${esc(z.postal_code)}</option>`,
    )
    .join("");
  parts.push(`<label>Zip <select data-action="select-zip">${zipOptions}</select></label>`);
  parts.push(
    '<div class="direction-toggle">',
    toggle("set-direction", "origin", state.direction === "origin", "as origin"),
    toggle("set-direction", "destination", state.direction === "destination", "as destination"),
    "</div>",
    toggle("toggle-intra", "", state.includeIntra, "include intra-zip trips"),
  );
  parts.push(
    `<div class="day-toggles">${DAY_KEYS.map((d) =>
      toggle("toggle-day", d, state.days.has(d), d),
    ).join("")}</div>`,
  );
  parts.push(
    `<div class="hour-toggles">${Array.from({ length: 24 }, (_, h) =>
      toggle("toggle-hour", String(h), state.hours.has(h), String(h)),
    ).join("")}</div>`,
  );
  parts.push("</div>");

  if (data.error !== null) {
    parts.push(`<div class="error-panel">Service error: ${esc(data.error)}</div>`);
  }

  const od = data.od;
  if (od !== null) {
    const heading =
      od.direction === "origin"
        ? `Destinations of trips starting in ${esc(od.selected_zip)}`
        : `Origins of trips ending in ${esc(od.selected_zip)}`;
    parts.push(`<h2>${heading}</h2>`, `<p class="total-line">${od.total} trips</p>`);
    if (od.total === 0) {
      parts.push('<div class="empty-state">No trips match this selection.</div>');
    } else {
      const counts = new Map(od.rows.map((r) => [r.zip, r.trips]));
      parts.push(
        '<div class="od-panels">',
        zipHeatSvg(data.zips, counts, state.zip),
        odBarChartHtml(od.rows),
        "</div>",
      );
    }
  }
  parts.push("</section>");
  return parts.join("");
}

export class OdViewController {
  readonly state: OdViewState = {
    zip: null,
    direction: "origin",
    includeIntra: false,
    days: new Set(DAY_KEYS),
    hours: new Set(Array.from({ length: 24 }, (_, h) => h)),
  };
  readonly data: OdViewData = { zips: [], od: null, error: null };
  renderCount = 0;

  private readonly debouncer: DirtySetDebouncer<"od">;
  private seq = 0;
  private flushed: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: OdApi,
    debounceMs = 150,
  ) {
    this.debouncer = new DirtySetDebouncer<"od">(debounceMs, () => {
      this.flushed = this.fetchOd();
    });
    root.addEventListener("click", (ev) => this.dispatch(ev));
    root.addEventListener("change", (ev) => this.dispatch(ev));
  }

  async settled(): Promise<void> {
    await this.flushed;
  }

  async init(): Promise<void> {
    try {
      this.data.zips = (await this.api.zips()).zips;
      this.state.zip = this.data.zips[0]?.postal_code ?? null;
      await this.fetchOd();
    } catch (err) {
      this.data.error = String(err instanceof Error ? err.message : err);
      this.render();
    }
  }

  private dispatch(ev: Event): void {
    const target = (ev.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) return;
    const action = target.dataset["action"];
    const value =
      target instanceof HTMLSelectElement ? target.value : (target.dataset["value"] ?? "");
    if (action) {
      this.handleAction(action, value);
    }
  }

  handleAction(action: string, value: string): void {
    switch (action) {
      case "select-zip":
        if (value !== this.state.zip) {
          this.state.zip = value;
          this.debouncer.mark("od");
        }
        break;
      case "set-direction":
        if (value !== this.state.direction) {
          this.state.direction = value as "origin" | "destination";
          this.debouncer.mark("od");
        }
        break;
      case "toggle-intra":
        this.state.includeIntra = !this.state.includeIntra;
        this.debouncer.mark("od");
        break;
      case "toggle-day": {
        const day = value as DayKey;
        if (this.state.days.has(day)) {
          if (this.state.days.size > 1) this.state.days.delete(day);
        } else {
          this.state.days.add(day);
        }
        this.debouncer.mark("od");
        break;
      }
      case "toggle-hour": {
        const hour = Number(value);
        if (this.state.hours.has(hour)) {
          if (this.state.hours.size > 1) this.state.hours.delete(hour);
        } else {
          this.state.hours.add(hour);
        }
        this.debouncer.mark("od");
        break;
      }
    }
    this.render();
  }

  private async fetchOd(): Promise<void> {
    if (this.state.zip === null) return;
    const token = ++this.seq;
    try {
      const od = await this.api.od({
        zip: this.state.zip,
        direction: this.state.direction,
        includeIntra: this.state.includeIntra,
        days:
          this.state.days.size === DAY_KEYS.length
            ? null
            : DAY_KEYS.filter((d) => this.state.days.has(d)),
        hours:
          this.state.hours.size === 24
            ? null
            : Array.from(this.state.hours).sort((a, b) => a - b),
      });
      if (token !== this.seq) return;
      this.data.od = od;
      this.data.error = null;
    } catch (err) {
      if (token !== this.seq) return;
      this.data.error = String(err instanceof Error ? err.message : err);
    }
    this.render();
  }

  render(): void {
    this.root.innerHTML = renderOdView(this.state, this.data);
    this.renderCount += 1;
  }
}
