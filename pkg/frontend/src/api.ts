/** HTTP client for the query service with latest-wins request handling.
 *
 * Each logical slot (one per endpoint family per view) keeps at most one
 * request in flight; issuing a new one aborts its predecessor so stale
 * responses can never overwrite newer state.
 */

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
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: { signal?: AbortSignal }) => Promise<Response>;

export class ApiClient implements SpeedApi, OdApi {
  private inflight = new Map<string, AbortController>();

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(slot: string, path: string): Promise<T> {
    this.inflight.get(slot)?.abort();
    const controller = new AbortController();
    this.inflight.set(slot, controller);
    try {
      const resp = await this.fetchFn(this.baseUrl + path, { signal: controller.signal });
      if (!resp.ok) {
        let detail = resp.statusText;
        try {
          detail = ((await resp.json()) as { detail?: string }).detail ?? detail;
        } catch {
          // non-JSON error body; keep the status text
        }
        throw new ApiError(resp.status, detail);
      }
      return (await resp.json()) as T;
    } finally {
      if (this.inflight.get(slot) === controller) {
        this.inflight.delete(slot);
      }
    }
  }

  routes(): Promise<RoutesResponse> {
    return this.get("routes", "/routes");
  }

  routeSegments(route: string): Promise<RouteSegmentsResponse> {
    return this.get("segments", `/routes/${encodeURIComponent(route)}/segments`);
  }

  routeOverview(route: string, metric: OverviewMetric): Promise<RouteOverviewResponse> {
    return this.get("overview", `/routes/${encodeURIComponent(route)}/overview?metric=${metric}`);
  }

  speedDistribution(
    wayId: string,
    days: DayKey[] | null,
    hours: number[] | null,
  ): Promise<SpeedDistributionResponse> {
    const params = new URLSearchParams();
    if (days !== null) params.set("days", days.join(","));
    if (hours !== null) params.set("hours", hours.join(","));
    const qs = params.toString();
    return this.get(
      "speed-distribution",
      `/segments/${encodeURIComponent(wayId)}/speed-distribution${qs ? "?" + qs : ""}`,
    );
  }

  zips(): Promise<ZipsResponse> {
    return this.get("zips", "/zips");
  }

  od(query: OdQuery): Promise<OdResponse> {
    const params = new URLSearchParams();
    params.set("zip", query.zip);
    params.set("direction", query.direction);
    params.set("include_intra", String(query.includeIntra));
    if (query.days !== null) params.set("days", query.days.join(","));
    if (query.hours !== null) params.set("hours", query.hours.join(","));
    return this.get("od", `/od?${params.toString()}`);
  }
}
