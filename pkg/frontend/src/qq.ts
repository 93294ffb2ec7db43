/**
 * Quantile-quantile panels: whitened summed-parameter samples against
 * standard-normal quantiles, one small panel per vector coordinate, with
 * the identity line as the normality reference.
 */

import { numberColumn, parseCsv, SchemaError } from "./csv.js";
import { Box, drawFrame, extent, SvgBuilder } from "./svg.js";

export function plotQq(csvText: string, maxPointsPerPanel = 400): string {
  const table = parseCsv(csvText);
  const coords = numberColumn(table, "coordinate");
  const theory = numberColumn(table, "theoretical_quantile");
  const sample = numberColumn(table, "sample_quantile");
  const ids = [...new Set(coords)].sort((a, b) => a - b);
  if (ids.length === 0) {
    throw new SchemaError("Q-Q report has no coordinates");
  }

  const columns = Math.min(ids.length, 3);
  const rows = Math.ceil(ids.length / columns);
  const panel = 200;
  const box: Box = {
    width: columns * panel + 70,
    height: rows * panel + 60,
    margin: { top: 24, right: 10, bottom: 36, left: 52 },
  };
  const svg = new SvgBuilder(box);

  ids.forEach((coord, index) => {
    const px = index % columns;
    const py = Math.floor(index / columns);
    const left = 52 + px * panel;
    const top = 24 + py * panel;
    const theoryHere: number[] = [];
    const sampleHere: number[] = [];
    for (let i = 0; i < coords.length; i += 1) {
      if (coords[i] === coord) {
        theoryHere.push(theory[i]);
        sampleHere.push(sample[i]);
      }
    }
    const step = Math.max(1, Math.floor(theoryHere.length / maxPointsPerPanel));
    const domain = extent([...theoryHere, ...sampleHere]);
    const frame = {
      x: (v: number) =>
        left + ((v - domain[0]) / (domain[1] - domain[0])) * (panel - 24),
      y: (v: number) =>
        top + panel - 36 -
        ((v - domain[0]) / (domain[1] - domain[0])) * (panel - 36),
    };
    svg.raw(
      `<rect x="${left}" y="${top}" width="${panel - 24}" height="${panel - 36}" fill="none" stroke="#ccc"/>`,
    );
    svg.line(
      frame.x(domain[0]),
      frame.y(domain[0]),
      frame.x(domain[1]),
      frame.y(domain[1]),
      'stroke="#d62728" stroke-width="1.2"',
    );
    for (let i = 0; i < theoryHere.length; i += step) {
      svg.circle(
        frame.x(theoryHere[i]),
        frame.y(sampleHere[i]),
        1.5,
        'fill="#1f77b4" fill-opacity="0.7"',
      );
    }
    svg.text(left + (panel - 24) / 2, top - 6, `coordinate ${coord}`,
             'text-anchor="middle" font-size="12"');
  });
  svg.text(box.width / 2, box.height - 10,
           "theoretical quantile vs sample quantile",
           'text-anchor="middle" font-size="12"');
  return svg.render();
}
