/** Pure SVG/HTML builders. Same inputs always yield identical markup, so a
 * render is a replayable function of (state, last response). */

import { DAY_KEYS } from "./types.js";
import type { OdRow, RouteSegmentInfo, SpeedBin, SpeedMetrics, ZipInfo } from "./types.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(value: number, digits = 1): string {
  return value.toFixed(digits);
}

const MARKER_LABELS: [keyof SpeedMetrics, string][] = [
  ["p25", "p25"],
  ["p50", "p50"],
  ["p75", "p75"],
  ["p85", "p85"],
  ["p95", "p95"],
  ["speed_limit_mph", "limit"],
];

/** Traversal-count histogram over speed bins with percentile/limit markers. */
export function histogramSvg(
  bins: SpeedBin[],
  metrics: SpeedMetrics | null,
  width = 640,
  height = 240,
): string {
  if (bins.length === 0) {
    return "";
  }
  const pad = { left: 40, right: 16, top: 18, bottom: 28 };
  const innerW = width - pad.left - pad.right;
  const innerH = height - pad.top - pad.bottom;
  const minMph = Math.min(...bins.map((b) => b.lower_mph));
  const maxMph = Math.max(...bins.map((b) => b.upper_mph));
  const maxCount = Math.max(...bins.map((b) => b.count));
  const x = (mph: number) => pad.left + ((mph - minMph) / (maxMph - minMph)) * innerW;
  const y = (count: number) => pad.top + innerH - (count / maxCount) * innerH;

  const bars = bins
    .map((b) => {
      const bx = x(b.lower_mph);
      const bw = Math.max(x(b.upper_mph) - bx - 1, 1);
      const by = y(b.count);
      return (
        `<rect class="hist-bar" data-lower="${b.lower_mph}" data-upper="${b.upper_mph}" ` +
        `data-count="${b.count}" x="${fmt(bx, 2)}" y="${fmt(by, 2)}" ` +
        `width="${fmt(bw, 2)}" height="${fmt(pad.top + innerH - by, 2)}">` +
        `<title>${b.lower_mph}-${b.upper_mph} mph: ${b.count}</title></rect>`
      );
    })
    .join("");

  let markers = "";
  if (metrics !== null) {
    for (const [key, label] of MARKER_LABELS) {
      const value = metrics[key];
      if (value === undefined || value < minMph || value > maxMph) continue;
      const mx = fmt(x(value), 2);
      const cls = key === "speed_limit_mph" ? "marker-limit" : "marker-pct";
      markers +=
        `<line class="${cls}" data-marker="${label}" data-mph="${value}" ` +
        `x1="${mx}" y1="${pad.top - 4}" x2="${mx}" y2="${pad.top + innerH}"/>` +
        `<text class="${cls}-label" x="${mx}" y="${pad.top - 6}" text-anchor="middle">${label}</text>`;
    }
  }

  const axis =
    `<text class="axis" x="${pad.left}" y="${height - 8}">${fmt(minMph, 0)} mph</text>` +
    `<text class="axis" x="${width - pad.right}" y="${height - 8}" text-anchor="end">${fmt(maxMph, 0)} mph</text>` +
    `<text class="axis" x="${pad.left - 6}" y="${pad.top + 10}" text-anchor="end">${maxCount}</text>`;

  return (
    `<svg class="histogram" viewBox="0 0 ${width} ${height}" role="img">` +
    bars +
    markers +
    axis +
    "</svg>"
  );
}

/** Descending horizontal bar chart of OD rows with percent labels. */
export function odBarChartHtml(rows: OdRow[]): string {
  if (rows.length === 0) {
    return "";
  }
  const maxTrips = Math.max(...rows.map((r) => r.trips));
  const items = rows
    .map((r) => {
      const pct = (100 * r.trips) / maxTrips;
      return (
        `<div class="od-row" data-zip="${esc(r.zip)}" data-trips="${r.trips}" data-percent="${r.percent}">` +
        `<span class="od-zip">${esc(r.zip)}</span>` +
        `<span class="od-bar-track"><span class="od-bar" style="width:${fmt(pct, 2)}%"></span></span>` +
        `<span class="od-value">${r.trips} (${fmt(r.percent, 1)}%)</span></div>`
      );
    })
    .join("");
  return `<div class="od-chart">${items}</div>`;
}

/** 7x24 day-of-week by hour-of-day traversal count grid. */
export function dayHourGridHtml(grid: number[][]): string {
  const maxCount = Math.max(1, ...grid.flat());
  const header =
    "<tr><th></th>" + Array.from({ length: 24 }, (_, h) => `<th>${h}</th>`).join("") + "</tr>";
  const rows = grid
    .map((row, d) => {
      const cells = row
        .map((count, h) => {
          const alpha = count === 0 ? 0 : 0.15 + (0.85 * count) / maxCount;
          return (
            `<td class="grid-cell" data-day="${DAY_KEYS[d]}" data-hour="${h}" data-count="${count}" ` +
            `style="background:rgba(31,99,190,${fmt(alpha, 3)})">${count > 0 ? count : ""}</td>`
          );
        })
        .join("");
      return `<tr><th>${DAY_KEYS[d]}</th>${cells}</tr>`;
    })
    .join("");
  return `<table class="day-hour-grid">${header}${rows}</table>`;
}

function projectRings(ringList: [number, number][][], width: number, height: number, pad = 8) {
  const lons = ringList.flat().map((c) => c[0]);
  const lats = ringList.flat().map((c) => c[1]);
  const minLon = Math.min(...lons);
  const maxLon = Math.max(...lons);
  const minLat = Math.min(...lats);
  const maxLat = Math.max(...lats);
  const spanLon = maxLon - minLon || 1e-9;
  const spanLat = maxLat - minLat || 1e-9;
  return (lon: number, lat: number): string => {
    const px = pad + ((lon - minLon) / spanLon) * (width - 2 * pad);
    const py = pad + ((maxLat - lat) / spanLat) * (height - 2 * pad);
    return `${fmt(px, 2)},${fmt(py, 2)}`;
  };
}

/** Diverging-free color ramp from low (yellow) to high (dark blue). */
function rampColor(t: number): string {
  const clamped = Math.max(0, Math.min(1, t));
  const r = Math.round(248 - clamped * 217);
  const g = Math.round(220 - clamped * 121);
  const b = Math.round(90 + clamped * 100);
  return `rgb(${r},${g},${b})`;
}

/** Schematic route map: segment polylines colored by the overview metric. */
export function routeMapSvg(
  segments: RouteSegmentInfo[],
  metricValues: Map<string, number | null>,
  selectedWay: string | null,
  width = 640,
  height = 130,
): string {
  if (segments.length === 0) {
    return "";
  }
  const project = projectRings(
    segments.map((s) => s.coordinates),
    width,
    height,
  );
  const values = [...metricValues.values()].filter((v): v is number => v !== null);
  const lo = values.length ? Math.min(...values) : 0;
  const hi = values.length ? Math.max(...values) : 1;
  const span = hi - lo || 1;
  const lines = segments
    .map((s) => {
      const value = metricValues.get(s.way_id) ?? null;
      const color = value === null ? "#c9c9c9" : rampColor((value - lo) / span);
      const points = s.coordinates.map(([lon, lat]) => project(lon, lat)).join(" ");
      const selected = s.way_id === selectedWay ? ' data-selected="true"' : "";
      const valueAttr = value === null ? "" : ` data-metric-value="${value}"`;
      return (
        `<polyline class="route-seg" data-action="select-way" data-value="${esc(s.way_id)}"` +
        `${selected}${valueAttr} points="${points}" stroke="${color}">` +
        `<title>${esc(s.way_id)} mi ${fmt(s.mile_start, 2)}-${fmt(s.mile_end, 2)}` +
        `${value === null ? "" : `: ${fmt(value, 1)}`}</title></polyline>`
      );
    })
    .join("");
  return `<svg class="route-map" viewBox="0 0 ${width} ${height}" role="img">${lines}</svg>`;
}

/** Zip-region heat panel colored by trip count; regions without geometry are skipped. */
export function zipHeatSvg(
  zips: ZipInfo[],
  counts: Map<string, number>,
  selectedZip: string | null,
  width = 320,
  height = 320,
): string {
  const withRings = zips.filter((z) => z.ring !== null);
  if (withRings.length === 0) {
    return "";
  }
  const project = projectRings(
    withRings.map((z) => z.ring as [number, number][]),
    width,
    height,
  );
  const maxCount = Math.max(1, ...counts.values());
  const polys = withRings
    .map((z) => {
      const count = counts.get(z.postal_code) ?? 0;
      const fill = count === 0 ? "#f4f4f4" : rampColor(count / maxCount);
      const points = (z.ring as [number, number][]).map(([lon, lat]) => project(lon, lat)).join(" ");
      const selected = z.postal_code === selectedZip ? ' data-selected="true"' : "";
      return (
        `<polygon class="zip-cell" data-action="select-zip" data-value="${esc(z.postal_code)}" ` +
        `data-trips="${count}"${selected} points="${points}" fill="${fill}">` +
        `<title>${esc(z.postal_code)}: ${count}</title></polygon>`
      );
    })
    .join("");
  return `<svg class="zip-heat" viewBox="0 0 ${width} ${height}" role="img">${polys}</svg>`;
}
