/** Speed-distribution tool: route/segment/day/hour selectors feed the
 * histogram, key-metric table, schematic route map, and day-hour grid.
 *
 * renderSpeedView is a pure function of (state, data); the controller owns
 * fetching with a debounced one-request-per-endpoint contract and
 * latest-wins sequence tokens.
 */

import { dayHourGridHtml, esc, histogramSvg, routeMapSvg } from "./charts.js";
import { DirtySetDebouncer } from "./debounce.js";
import { DAY_KEYS, OVERVIEW_METRICS } from "./types.js";
import type {
  DayKey,
  OverviewMetric,
  RouteOverviewResponse,
  RouteSegmentInfo,
  SpeedApi,
  SpeedDistributionResponse,
  SpeedMetrics,
} from "./types.js";

export interface SpeedViewState {
  route: string | null;
  wayId: string | null;
  days: Set<DayKey>;
  hours: Set<number>;
  metric: OverviewMetric;
}

export interface SpeedViewData {
  routes: string[];
  segments: RouteSegmentInfo[];
  dist: SpeedDistributionResponse | null;
  overview: RouteOverviewResponse | null;
  error: string | null;
}

export type SpeedFetchKind = "segments" | "dist" | "overview";

const METRIC_ROWS: [keyof SpeedMetrics, string][] = [
  ["p25", "25th percentile"],
  ["p50", "median"],
  ["p75", "75th percentile"],
  ["p85", "85th percentile"],
  ["p95", "95th percentile"],
  ["speed_limit_mph", "speed limit"],
  ["median_minus_limit", "median − limit"],
  ["p95_minus_limit", "p95 − limit"],
];

function selector<T extends string | number>(
  action: string,
  values: readonly T[],
  selected: T | null,
  label: (v: T) => string = String,
): string {
  const options = values
    .map(
      (v) =>
        `<option value="${esc(String(v))}"${v === selected ? " selected" : ""}>${esc(label(v))}</option>`,
    )
    .join("");
  return `<select data-action="${action}">${options}</select>`;
}

function toggleRow<T extends string | number>(
  action: string,
  values: readonly T[],
  selected: Set<T>,
): string {
  return values
    .map(
      (v) =>
        `<button class="toggle${selected.has(v) ? " on" : ""}" data-action="${action}" ` +
        `data-value="${esc(String(v))}">${esc(String(v))}</button>`,
    )
    .join("");
}

export function renderSpeedView(state: SpeedViewState, data: SpeedViewData): string {
  const parts: string[] = ['<section class="speed-view">'];
  parts.push('<div class="selectors">');
  parts.push(`<label>Route ${selector("select-route", data.routes, state.route)}</label>`);
  parts.push(
    `<label>Segment ${selector(
      "select-way",
      data.segments.map((s) => s.way_id),
      state.wayId,
      (w) => {
        const seg = data.segments.find((s) => s.way_id === w);
        return seg ? `${w} (mi ${seg.mile_start.toFixed(2)}–${seg.mile_end.toFixed(2)})` : String(w);
      },
    )}</label>`,
  );
  parts.push(`<div class="day-toggles">${toggleRow("toggle-day", DAY_KEYS, state.days)}</div>`);
  parts.push(
    `<div class="hour-toggles">${toggleRow(
      "toggle-hour",
      Array.from({ length: 24 }, (_, h) => h),
      state.hours,
    )}</div>`,
  );
  parts.push(
    `<label>Map metric ${selector("select-metric", OVERVIEW_METRICS, state.metric)}</label>`,
  );
  parts.push("</div>");

  if (data.error !== null) {
    parts.push(`<div class="error-panel">Service error: ${esc(data.error)}</div>`);
  }

  const dist = data.dist;
  if (dist !== null) {
    const where =
      dist.route_name !== null
        ? `${esc(dist.route_name)} · mi ${dist.mile_start?.toFixed(2)}–${dist.mile_end?.toFixed(2)}`
        : "unrouted segment";
    parts.push(
      `<h2>${esc(dist.way_id)} <small>${where}</small></h2>`,
      `<p class="total-line">${dist.total_traversals} traversals</p>`,
    );
    if (dist.total_traversals === 0) {
      parts.push('<div class="empty-state">No traversals match this selection.</div>');
    } else {
      parts.push(histogramSvg(dist.bins, dist.metrics));
      if (dist.metrics !== null) {
        const rows = METRIC_ROWS.filter(([key]) => dist.metrics![key] !== undefined)
          .map(
            ([key, label]) =>
              `<tr data-metric="${key}"><th>${label}</th>` +
              `<td>${(dist.metrics![key] as number).toFixed(1)} mph</td></tr>`,
          )
          .join("");
        parts.push(`<table class="metrics-table">${rows}</table>`);
      }
    }
  }

  if (data.overview !== null) {
    const values = new Map(data.overview.segments.map((s) => [s.way_id, s.metric_value]));
    parts.push(
      `<h3>Route overview · ${esc(data.overview.metric)}</h3>`,
      routeMapSvg(data.segments, values, state.wayId),
    );
  }

  if (dist !== null && dist.total_traversals > 0) {
    parts.push("<h3>Traversals by day and hour</h3>", dayHourGridHtml(dist.traversal_grid));
  }
  parts.push("</section>");
  return parts.join("");
}

export class SpeedViewController {
  readonly state: SpeedViewState = {
    route: null,
    wayId: null,
    days: new Set(DAY_KEYS),
    hours: new Set(Array.from({ length: 24 }, (_, h) => h)),
    metric: "median",
  };
  readonly data: SpeedViewData = {
    routes: [],
    segments: [],
    dist: null,
    overview: null,
    error: null,
  };
  renderCount = 0;

  private readonly debouncer: DirtySetDebouncer<SpeedFetchKind>;
  private seq = 0;
  private flushed: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: SpeedApi,
    debounceMs = 150,
  ) {
    this.debouncer = new DirtySetDebouncer<SpeedFetchKind>(debounceMs, (kinds) => {
      this.flushed = this.fetchKinds(kinds);
    });
    root.addEventListener("click", (ev) => this.dispatch(ev));
    root.addEventListener("change", (ev) => this.dispatch(ev));
  }

  /** Resolves once the most recent debounced flush has been applied. */
  async settled(): Promise<void> {
    await this.flushed;
  }

  async init(): Promise<void> {
    try {
      this.data.routes = (await this.api.routes()).routes;
      this.state.route = this.data.routes[0] ?? null;
      await this.fetchKinds(new Set(["segments", "dist", "overview"]));
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
      case "select-route":
        if (value !== this.state.route) {
          this.state.route = value;
          this.state.wayId = null; // re-chosen from the new segment list
          this.debouncer.mark("segments", "dist", "overview");
        }
        break;
      case "select-way":
        if (value !== this.state.wayId) {
          this.state.wayId = value;
          this.debouncer.mark("dist");
        }
        break;
      case "toggle-day": {
        const day = value as DayKey;
        if (this.state.days.has(day)) {
          if (this.state.days.size > 1) this.state.days.delete(day);
        } else {
          this.state.days.add(day);
        }
        this.debouncer.mark("dist");
        break;
      }
      case "toggle-hour": {
        const hour = Number(value);
        if (this.state.hours.has(hour)) {
          if (this.state.hours.size > 1) this.state.hours.delete(hour);
        } else {
          this.state.hours.add(hour);
        }
        this.debouncer.mark("dist");
        break;
      }
      case "select-metric":
        if (value !== this.state.metric) {
          this.state.metric = value as OverviewMetric;
          this.debouncer.mark("overview");
        }
        break;
    }
    this.render(); // selector state reflects immediately; data follows the fetch
  }

  private dayFilter(): DayKey[] | null {
    return this.state.days.size === DAY_KEYS.length
      ? null
      : DAY_KEYS.filter((d) => this.state.days.has(d));
  }

  private hourFilter(): number[] | null {
    return this.state.hours.size === 24
      ? null
      : Array.from(this.state.hours).sort((a, b) => a - b);
  }

  private async fetchKinds(kinds: Set<SpeedFetchKind>): Promise<void> {
    const token = ++this.seq;
    try {
      if (kinds.has("segments") && this.state.route !== null) {
        const segments = (await this.api.routeSegments(this.state.route)).segments;
        if (token !== this.seq) return;
        this.data.segments = segments;
        if (!segments.some((s) => s.way_id === this.state.wayId)) {
          this.state.wayId = segments[0]?.way_id ?? null;
        }
      }
      const fetches: Promise<void>[] = [];
      if (kinds.has("dist") && this.state.wayId !== null) {
        const wayId = this.state.wayId;
        fetches.push(
          this.api.speedDistribution(wayId, this.dayFilter(), this.hourFilter()).then((dist) => {
            if (token === this.seq) this.data.dist = dist;
          }),
        );
      }
      if (kinds.has("overview") && this.state.route !== null) {
        fetches.push(
          this.api.routeOverview(this.state.route, this.state.metric).then((overview) => {
            if (token === this.seq) this.data.overview = overview;
          }),
        );
      }
      await Promise.all(fetches);
      if (token !== this.seq) return;
      this.data.error = null;
    } catch (err) {
      if (token !== this.seq) return;
      this.data.error = String(err instanceof Error ? err.message : err);
    }
    this.render();
  }

  render(): void {
    this.root.innerHTML = renderSpeedView(this.state, this.data);
    this.renderCount += 1;
  }
}
