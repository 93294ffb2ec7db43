/**
 * Sampling-error curve: standard error and relative error of the Monte
 * Carlo entropy term against the sample count, log-scaled x axis.
 */

import { numberColumn, parseCsv, SchemaError } from "./csv.js";
import { DEFAULT_BOX, drawFrame, extent, SERIES_COLORS, SvgBuilder } from "./svg.js";

export function plotMcError(csvText: string): string {
  const table = parseCsv(csvText);
  const sizes = numberColumn(table, "n_s");
  const stdError = numberColumn(table, "std_error");
  const percent = numberColumn(table, "percent_error");
  if (sizes.length === 0) {
    throw new SchemaError("sampling-error report has no rows");
  }
  const svg = new SvgBuilder(DEFAULT_BOX);
  const frame = drawFrame(
    svg,
    [Math.min(...sizes), Math.max(...sizes)],
    extent([...stdError, ...percent, 0]),
    {
      xLabel: "Monte Carlo samples",
      yLabel: "error",
      title: "sampling error vs sample count",
      xLog: true,
    },
  );
  const seriesList: Array<{ name: string; values: number[] }> = [
    { name: "standard error", values: stdError },
    { name: "percent error vs reference", values: percent },
  ];
  seriesList.forEach((series, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    svg.path(
      sizes.map((n, i) => [frame.x(n), frame.y(series.values[i])] as [number, number]),
      `fill="none" stroke="${color}" stroke-width="1.6"`,
    );
    for (let i = 0; i < sizes.length; i += 1) {
      svg.circle(frame.x(sizes[i]), frame.y(series.values[i]), 2.5,
                 `fill="${color}"`);
    }
    const y = frame.plotTop + 10 + 14 * index;
    svg.line(frame.plotRight - 170, y, frame.plotRight - 152, y,
             `stroke="${color}" stroke-width="2"`);
    svg.text(frame.plotRight - 146, y + 3.5, series.name);
  });
  return svg.render();
}
