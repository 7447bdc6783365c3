import { describe, expect, it } from "vitest";

import { dayHourGridHtml, histogramSvg, odBarChartHtml, routeMapSvg, zipHeatSvg } from "../src/charts.js";
import type {
  OdResponse,
  RouteSegmentsResponse,
  SpeedDistributionResponse,
  ZipsResponse,
} from "../src/types.js";
import { golden } from "./helpers.js";

const dist = golden<SpeedDistributionResponse>("speed_default");
const od = golden<OdResponse>("od_origin");

function parse(html: string): HTMLElement {
  const el = document.createElement("div");
  el.innerHTML = html;
  return el;
}

describe("histogramSvg", () => {
  it("renders one bar per bin with the exact counts", () => {
    const dom = parse(histogramSvg(dist.bins, dist.metrics));
    const bars = [...dom.querySelectorAll(".hist-bar")];
    expect(bars.length).toBe(dist.bins.length);
    expect(bars.map((b) => Number(b.getAttribute("data-count")))).toEqual(
      dist.bins.map((b) => b.count),
    );
    expect(bars.map((b) => Number(b.getAttribute("data-lower")))).toEqual(
      dist.bins.map((b) => b.lower_mph),
    );
  });

  it("draws percentile and speed-limit markers", () => {
    const dom = parse(histogramSvg(dist.bins, dist.metrics));
    const markers = [...dom.querySelectorAll("[data-marker]")].map((m) =>
      m.getAttribute("data-marker"),
    );
    for (const label of ["p25", "p50", "p95"]) {
      expect(markers).toContain(label);
    }
    expect(markers).toContain("limit");
  });

  it("is a pure function of its inputs", () => {
    expect(histogramSvg(dist.bins, dist.metrics)).toBe(histogramSvg(dist.bins, dist.metrics));
  });

  it("renders nothing for an empty distribution", () => {
    expect(histogramSvg([], null)).toBe("");
  });
});

describe("odBarChartHtml", () => {
  it("renders rows in response order with trips and percents", () => {
    const dom = parse(odBarChartHtml(od.rows));
    const rows = [...dom.querySelectorAll(".od-row")];
    expect(rows.map((r) => r.getAttribute("data-zip"))).toEqual(od.rows.map((r) => r.zip));
    expect(rows.map((r) => Number(r.getAttribute("data-trips")))).toEqual(
      od.rows.map((r) => r.trips),
    );
  });

  it("percent attributes sum to 100 within 0.1", () => {
    const dom = parse(odBarChartHtml(od.rows));
    const total = [...dom.querySelectorAll(".od-row")]
      .map((r) => Number(r.getAttribute("data-percent")))
      .reduce((a, b) => a + b, 0);
    expect(Math.abs(total - 100)).toBeLessThanOrEqual(0.1);
  });
});

describe("dayHourGridHtml", () => {
  it("renders 7x24 cells whose counts match the response grid", () => {
    const dom = parse(dayHourGridHtml(dist.traversal_grid));
    const cells = [...dom.querySelectorAll(".grid-cell")];
    expect(cells.length).toBe(7 * 24);
    const total = cells.reduce((acc, c) => acc + Number(c.getAttribute("data-count")), 0);
    expect(total).toBe(dist.total_traversals);
  });
});

describe("routeMapSvg", () => {
  it("draws every segment and flags the selected one", () => {
    const segments = golden<RouteSegmentsResponse>("route_segments").segments;
    const values = new Map(segments.map((s) => [s.way_id, 1.0]));
    const dom = parse(routeMapSvg(segments, values, segments[1].way_id));
    const polys = [...dom.querySelectorAll(".route-seg")];
    expect(polys.length).toBe(segments.length);
    expect(
      polys.filter((p) => p.getAttribute("data-selected") === "true").map((p) => p.getAttribute("data-value")),
    ).toEqual([segments[1].way_id]);
  });
});

describe("zipHeatSvg", () => {
  it("colors a polygon per region with trip counts attached", () => {
    const zips = golden<ZipsResponse>("zips").zips;
    const counts = new Map(od.rows.map((r) => [r.zip, r.trips]));
    const dom = parse(zipHeatSvg(zips, counts, od.selected_zip));
    const polys = [...dom.querySelectorAll(".zip-cell")];
    expect(polys.length).toBe(zips.filter((z) => z.ring !== null).length);
    for (const row of od.rows) {
      const poly = polys.find((p) => p.getAttribute("data-value") === row.zip);
      expect(poly?.getAttribute("data-trips")).toBe(String(row.trips));
    }
  });
});
