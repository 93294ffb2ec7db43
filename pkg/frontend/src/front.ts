/**
 * Objective-space snapshot: true versus estimated trade-off points at one
 * decision instance, with the preference distribution's 1- and 2-sigma
 * ellipses for orientation.
 */

import { numberColumn, parseCsv, prefixedColumns, SchemaError, stringColumn } from "./csv.js";
import { DEFAULT_BOX, drawFrame, extent, fmt, SvgBuilder } from "./svg.js";

export interface Preference {
  mean: [number, number];
  cov: [[number, number], [number, number]];
}

export interface FrontPlotOptions {
  instance: number;
  preference?: Preference;
  title?: string;
}

interface Point {
  x: number;
  y: number;
  isTrue: boolean;
}

export function plotFront(csvText: string, options: FrontPlotOptions): string {
  const table = parseCsv(csvText);
  const meanColumns = prefixedColumns(table, "mean_");
  if (meanColumns.length < 2) {
    throw new SchemaError("front snapshot needs at least two mean columns");
  }
  const instances = numberColumn(table, "instance");
  const isTrue = stringColumn(table, "is_true_front");
  const xs = numberColumn(table, meanColumns[0]);
  const ys = numberColumn(table, meanColumns[1]);

  const points: Point[] = [];
  for (let i = 0; i < instances.length; i += 1) {
    if (instances[i] === options.instance) {
      points.push({ x: xs[i], y: ys[i], isTrue: isTrue[i] === "1" });
    }
  }
  if (points.length === 0) {
    throw new SchemaError(`no snapshot rows for instance ${options.instance}`);
  }
  if (!points.some((p) => !p.isTrue)) {
    throw new SchemaError(
      `instance ${options.instance} has no estimated front points`,
    );
  }

  const allX = points.map((p) => p.x);
  const allY = points.map((p) => p.y);
  if (options.preference) {
    for (const k of [1, 2]) {
      for (const [ex, ey] of ellipsePoints(options.preference, k)) {
        allX.push(ex);
        allY.push(ey);
      }
    }
  }

  const svg = new SvgBuilder(DEFAULT_BOX);
  const frame = drawFrame(svg, extent(allX), extent(allY), {
    xLabel: "objective 1",
    yLabel: "objective 2",
    title: options.title ?? `front at instance ${options.instance}`,
  });

  if (options.preference) {
    for (const k of [2, 1]) {
      const ring = ellipsePoints(options.preference, k).map(
        ([ex, ey]) => [frame.x(ex), frame.y(ey)] as [number, number],
      );
      svg.path(
        ring,
        `fill="none" stroke="#999" stroke-width="1" stroke-dasharray="${k === 1 ? "none" : "4 3"}"`,
        true,
      );
    }
    svg.circle(
      frame.x(options.preference.mean[0]),
      frame.y(options.preference.mean[1]),
      3,
      'fill="none" stroke="#999" stroke-width="1.5"',
    );
  }

  for (const point of points.filter((p) => p.isTrue)) {
    const cx = frame.x(point.x);
    const cy = frame.y(point.y);
    svg.raw(
      `<rect x="${fmt(cx - 3.5)}" y="${fmt(cy - 3.5)}" width="7" height="7" ` +
        'fill="none" stroke="#d62728" stroke-width="1.5"/>',
    );
  }
  for (const point of points.filter((p) => !p.isTrue)) {
    svg.circle(frame.x(point.x), frame.y(point.y), 3, 'fill="#1f77b4"');
  }

  const legendX = frame.plotRight - 150;
  svg.raw(
    `<rect x="${fmt(legendX - 8)}" y="${fmt(frame.plotTop + 2)}" width="158" height="34" fill="white" stroke="#ccc"/>`,
  );
  svg.raw(
    `<rect x="${fmt(legendX)}" y="${fmt(frame.plotTop + 8)}" width="7" height="7" fill="none" stroke="#d62728" stroke-width="1.5"/>`,
  );
  svg.text(legendX + 12, frame.plotTop + 15, "true front");
  svg.circle(legendX + 3.5, frame.plotTop + 25.5, 3, 'fill="#1f77b4"');
  svg.text(legendX + 12, frame.plotTop + 29, "estimated front");
  return svg.render();
}

/** Closed polyline approximating the k-sigma ellipse of the preference. */
export function ellipsePoints(
  preference: Preference,
  k: number,
  segments = 72,
): Array<[number, number]> {
  const [[a, b], [c, d]] = preference.cov;
  if (Math.abs(b - c) > 1e-9) {
    throw new SchemaError("preference covariance must be symmetric");
  }
  // eigendecomposition of a symmetric 2x2 matrix
  const trace = a + d;
  const det = a * d - b * c;
  const gap = Math.sqrt(Math.max(trace * trace - 4 * det, 0));
  const l1 = (trace + gap) / 2;
  const l2 = (trace - gap) / 2;
  if (l2 <= 0) {
    throw new SchemaError("preference covariance must be positive definite");
  }
  const theta = Math.abs(b) < 1e-12 && a >= d ? 0 : Math.atan2(l1 - a, b || 1e-300);
  const cosT = Math.cos(theta);
  const sinT = Math.sin(theta);
  const r1 = k * Math.sqrt(l1);
  const r2 = k * Math.sqrt(l2);
  const out: Array<[number, number]> = [];
  for (let i = 0; i < segments; i += 1) {
    const phi = (2 * Math.PI * i) / segments;
    const ex = r1 * Math.cos(phi);
    const ey = r2 * Math.sin(phi);
    out.push([
      preference.mean[0] + cosT * ex - sinT * ey,
      preference.mean[1] + sinT * ex + cosT * ey,
    ]);
  }
  return out;
}
