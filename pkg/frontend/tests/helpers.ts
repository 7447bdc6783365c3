/** Test support: golden service responses (recorded from the fixture
 * service) and counting fake API clients built on them. */

import { readFileSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

import type {
  DayKey,
  OdApi,
  OdQuery,
  OdResponse,
  OverviewMetric,
  RouteOverviewResponse,
  RouteSegmentsResponse,
  RoutesResponse,
  SpeedApi,
  SpeedDistributionResponse,
  ZipsResponse,
} from "../src/types.js";

const GOLDEN_DIR = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)),
  "../../tests/golden",
);

export function golden<T>(name: string): T {
  return JSON.parse(readFileSync(path.join(GOLDEN_DIR, `${name}.json`), "utf-8")) as T;
}

export const goldenRequests: { name: string; path: string; status: number }[] =
  golden("requests");

/** The hour the golden fixture recorded as having no traffic on the busy way. */
export function emptyHour(): number {
  const req = goldenRequests.find((r) => r.name === "speed_empty")!;
  return Number(new URL("http://x" + req.path).searchParams.get("hours"));
}

export class FakeSpeedApi implements SpeedApi {
  calls = { routes: 0, segments: 0, overview: 0, dist: 0 };
  failNext = false;

  async routes(): Promise<RoutesResponse> {
    this.calls.routes += 1;
    return golden<RoutesResponse>("routes");
  }

  async routeSegments(_route: string): Promise<RouteSegmentsResponse> {
    this.calls.segments += 1;
    return golden<RouteSegmentsResponse>("route_segments");
  }

  async routeOverview(_route: string, metric: OverviewMetric): Promise<RouteOverviewResponse> {
    this.calls.overview += 1;
    if (metric === "p95_minus_limit") {
      return golden<RouteOverviewResponse>("overview_p95_minus_limit");
    }
    const base = golden<RouteOverviewResponse>("overview_median");
    return { ...base, metric };
  }

  async speedDistribution(
    _wayId: string,
    _days: DayKey[] | null,
    hours: number[] | null,
  ): Promise<SpeedDistributionResponse> {
    this.calls.dist += 1;
    if (this.failNext) {
      this.failNext = false;
      throw new Error("service unavailable");
    }
    if (hours !== null && hours.length === 1 && hours[0] === emptyHour()) {
      return golden<SpeedDistributionResponse>("speed_empty");
    }
    return golden<SpeedDistributionResponse>("speed_default");
  }
}

export class FakeOdApi implements OdApi {
  calls = { zips: 0, od: 0 };
  emptyZip = "00000";

  async zips(): Promise<ZipsResponse> {
    this.calls.zips += 1;
    return golden<ZipsResponse>("zips");
  }

  async od(query: OdQuery): Promise<OdResponse> {
    this.calls.od += 1;
    if (query.zip === this.emptyZip) {
      return {
        selected_zip: query.zip,
        direction: query.direction,
        include_intra: query.includeIntra,
        filters: { days: [], hours: [] },
        total: 0,
        rows: [],
      };
    }
    if (query.direction === "destination") {
      return golden<OdResponse>("od_destination");
    }
    return golden<OdResponse>(query.includeIntra ? "od_origin_intra" : "od_origin");
  }
}

export function container(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}
