/** Response shapes of the tripmill query service. */

export type DayKey = "mon" | "tue" | "wed" | "thu" | "fri" | "sat" | "sun";

export const DAY_KEYS: readonly DayKey[] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

export type OverviewMetric = "median" | "p95" | "median_minus_limit" | "p95_minus_limit";

export const OVERVIEW_METRICS: readonly OverviewMetric[] = [
  "median",
  "p95",
  "median_minus_limit",
  "p95_minus_limit",
];

export interface SpeedBin {
  lower_mph: number;
  upper_mph: number;
  count: number;
}

export interface SpeedMetrics {
  p25: number;
  p50: number;
  p75: number;
  p85: number;
  p95: number;
  speed_limit_mph?: number;
  median_minus_limit?: number;
  p95_minus_limit?: number;
}

export interface SpeedDistributionResponse {
  way_id: string;
  route_name: string | null;
  mile_start: number | null;
  mile_end: number | null;
  filters: { days: DayKey[]; hours: number[] };
  total_traversals: number;
  bins: SpeedBin[];
  metrics: SpeedMetrics | null;
  traversal_grid: number[][];
}

export interface OverviewSegment {
  way_id: string;
  mile_start: number;
  mile_end: number;
  metric_value: number | null;
}

export interface RouteOverviewResponse {
  route_name: string;
  metric: string;
  segments: OverviewSegment[];
}

export interface RouteSegmentInfo {
  way_id: string;
  mile_start: number;
  mile_end: number;
  direction: string;
  road_class: string;
  speed_limit_mph: number | null;
  coordinates: [number, number][];
}

export interface RouteSegmentsResponse {
  route_name: string;
  segments: RouteSegmentInfo[];
}

export interface RoutesResponse {
  routes: string[];
}

export interface OdRow {
  zip: string;
  trips: number;
  percent: number;
}

export interface OdResponse {
  selected_zip: string;
  direction: "origin" | "destination";
  include_intra: boolean;
  filters: { days: DayKey[]; hours: number[] };
  total: number;
  rows: OdRow[];
}

export interface ZipInfo {
  postal_code: string;
  ring: [number, number][] | null;
}

export interface ZipsResponse {
  zips: ZipInfo[];
}

export interface OdQuery {
  zip: string;
  direction: "origin" | "destination";
  includeIntra: boolean;
  days: DayKey[] | null;
  hours: number[] | null;
}

/** The service calls the speed view makes. */
export interface SpeedApi {
  routes(): Promise<RoutesResponse>;
  routeSegments(route: string): Promise<RouteSegmentsResponse>;
  routeOverview(route: string, metric: OverviewMetric): Promise<RouteOverviewResponse>;
  speedDistribution(
    wayId: string,
    days: DayKey[] | null,
    hours: number[] | null,
  ): Promise<SpeedDistributionResponse>;
}

/** The service calls the OD view makes. */
export interface OdApi {
  zips(): Promise<ZipsResponse>;
  od(query: OdQuery): Promise<OdResponse>;
}
