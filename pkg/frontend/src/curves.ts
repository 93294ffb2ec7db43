/**
 * Learning curves from the benchmark aggregate: per-selector mean
 * cumulative regret (top panel) and cumulative bias (bottom panel) against
 * the instance index, with shaded one-sigma bands.
 */

import { numberColumn, parseCsv, SchemaError, stringColumn } from "./csv.js";
import {
  Box,
  DEFAULT_BOX,
  drawFrame,
  extent,
  fmt,
  SERIES_COLORS,
  SvgBuilder,
} from "./svg.js";

const CURVES_BOX: Box = {
  width: DEFAULT_BOX.width,
  height: 640,
  margin: DEFAULT_BOX.margin,
};

interface Series {
  selector: string;
  instances: number[];
  mean: number[];
  std: number[];
}

function collectSeries(
  table: ReturnType<typeof parseCsv>,
  meanColumn: string,
  stdColumn: string,
): Series[] {
  const selectors = stringColumn(table, "selector");
  const instances = numberColumn(table, "instance");
  const means = numberColumn(table, meanColumn);
  const stds = numberColumn(table, stdColumn);
  const bySelector = new Map<string, Series>();
  for (let i = 0; i < selectors.length; i += 1) {
    let series = bySelector.get(selectors[i]);
    if (!series) {
      series = { selector: selectors[i], instances: [], mean: [], std: [] };
      bySelector.set(selectors[i], series);
    }
    series.instances.push(instances[i]);
    series.mean.push(means[i]);
    series.std.push(stds[i]);
  }
  return [...bySelector.values()].sort((a, b) =>
    a.selector.localeCompare(b.selector),
  );
}

function drawPanel(
  svg: SvgBuilder,
  series: Series[],
  top: number,
  bottom: number,
  yLabel: string,
  title: string,
): void {
  const allInstances = series.flatMap((s) => s.instances);
  const allValues = series.flatMap((s) => [
    ...s.mean.map((m, i) => m - s.std[i]),
    ...s.mean.map((m, i) => m + s.std[i]),
  ]);
  const frame = drawFrame(svg, extent(allInstances, 0), extent(allValues), {
    top,
    bottom,
    xLabel: "instance",
    yLabel,
    title,
  });
  series.forEach((s, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    const upper = s.instances.map(
      (instance, i) =>
        [frame.x(instance), frame.y(s.mean[i] + s.std[i])] as [number, number],
    );
    const lower = s.instances
      .map(
        (instance, i) =>
          [frame.x(instance), frame.y(s.mean[i] - s.std[i])] as [
            number,
            number,
          ],
      )
      .reverse();
    svg.path([...upper, ...lower], `fill="${color}" fill-opacity="0.15" stroke="none"`, true);
    svg.path(
      s.instances.map(
        (instance, i) =>
          [frame.x(instance), frame.y(s.mean[i])] as [number, number],
      ),
      `fill="none" stroke="${color}" stroke-width="1.6"`,
    );
  });
}

export function plotCurves(csvText: string): string {
  const table = parseCsv(csvText);
  const regret = collectSeries(table, "cum_regret_mean", "cum_regret_std");
  const bias = collectSeries(table, "cum_bias_mean", "cum_bias_std");
  if (regret.length === 0) {
    throw new SchemaError("aggregate has no rows");
  }
  const svg = new SvgBuilder(CURVES_BOX);
  const mid = CURVES_BOX.height / 2;
  drawPanel(svg, regret, CURVES_BOX.margin.top, mid - 36,
            "cumulative regret", "cumulative regret");
  drawPanel(svg, bias, mid + 24, CURVES_BOX.height - CURVES_BOX.margin.bottom,
            "cumulative bias", "cumulative bias");

  const legendX = CURVES_BOX.margin.left + 8;
  regret.forEach((s, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    const y = CURVES_BOX.margin.top + 10 + 14 * index;
    svg.line(legendX, y, legendX + 18, y, `stroke="${color}" stroke-width="2"`);
    svg.text(legendX + 24, y + 3.5, s.selector);
  });
  return svg.render();
}
