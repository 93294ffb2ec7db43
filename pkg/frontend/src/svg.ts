/**
 * Deterministic SVG assembly: fixed-precision numbers, insertion-ordered
 * elements, no timestamps or randomness, so identical inputs render to
 * byte-identical documents.
 */

export interface Box {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_BOX: Box = {
  width: 640,
  height: 420,
  margin: { top: 28, right: 20, bottom: 44, left: 58 },
};

export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`cannot format non-finite value ${value}`);
  }
  const text = value.toFixed(2);
  return text === "-0.00" ? "0.00" : text;
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) =>
    r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

export function logScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const inner = linearScale(
    [Math.log10(domain[0]), Math.log10(domain[1])],
    range,
  );
  const scale = ((value: number) => inner(Math.log10(value))) as Scale;
  scale.domain = domain;
  return scale;
}

export function extent(values: number[], pad = 0.05): [number, number] {
  if (values.length === 0) {
    throw new Error("cannot compute the extent of no values");
  }
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  const rawStep = (hi - lo) / count;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const candidates = [1, 2, 5, 10].map((m) => m * power);
  const step = candidates.find((c) => (hi - lo) / c <= count) ?? candidates[3];
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-9; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(readonly box: Box) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${box.width}" ` +
        `height="${box.height}" viewBox="0 0 ${box.width} ${box.height}" ` +
        `font-family="Helvetica, Arial, sans-serif" font-size="11">`,
    );
    this.parts.push(
      `<rect width="${box.width}" height="${box.height}" fill="white"/>`,
    );
  }

  raw(element: string): void {
    this.parts.push(element);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ${style}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, style: string): void {
    this.parts.push(
      `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${r}" ${style}/>`,
    );
  }

  path(points: Array<[number, number]>, style: string, close = false): void {
    const d = points
      .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`)
      .join(" ");
    this.parts.push(`<path d="${d}${close ? " Z" : ""}" ${style}/>`);
  }

  text(x: number, y: number, content: string, style = ""): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" ${style}>${escapeXml(content)}</text>`,
    );
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Frame {
  x: Scale;
  y: Scale;
  plotLeft: number;
  plotRight: number;
  plotTop: number;
  plotBottom: number;
}

/** Axes, tick marks and labels for one panel; returns the data scales. */
export function drawFrame(
  svg: SvgBuilder,
  xDomain: [number, number],
  yDomain: [number, number],
  options: {
    top?: number;
    bottom?: number;
    xLabel: string;
    yLabel: string;
    title?: string;
    xLog?: boolean;
  },
): Frame {
  const { box } = svg;
  const top = options.top ?? box.margin.top;
  const bottom = options.bottom ?? box.height - box.margin.bottom;
  const left = box.margin.left;
  const right = box.width - box.margin.right;
  const x = options.xLog
    ? logScale(xDomain, [left, right])
    : linearScale(xDomain, [left, right]);
  const y = linearScale(yDomain, [bottom, top]);
  const axis = 'stroke="#333" stroke-width="1"';
  svg.line(left, bottom, right, bottom, axis);
  svg.line(left, bottom, left, top, axis);
  const xTicks = options.xLog
    ? powersOfTen(xDomain)
    : ticks(xDomain);
  for (const tick of xTicks) {
    const px = x(tick);
    svg.line(px, bottom, px, bottom + 4, axis);
    svg.text(px, bottom + 16, String(tick), 'text-anchor="middle"');
  }
  for (const tick of ticks(yDomain)) {
    const py = y(tick);
    svg.line(left - 4, py, left, py, axis);
    svg.text(left - 7, py + 3.5, shortNumber(tick), 'text-anchor="end"');
  }
  svg.text(
    (left + right) / 2,
    bottom + 32,
    options.xLabel,
    'text-anchor="middle" font-size="12"',
  );
  svg.raw(
    `<text x="${fmt(16)}" y="${fmt((top + bottom) / 2)}" text-anchor="middle" ` +
      `font-size="12" transform="rotate(-90 16 ${fmt((top + bottom) / 2)})">` +
      `${escapeXml(options.yLabel)}</text>`,
  );
  if (options.title) {
    svg.text(
      (left + right) / 2,
      top - 8,
      options.title,
      'text-anchor="middle" font-size="13" font-weight="bold"',
    );
  }
  return { x, y, plotLeft: left, plotRight: right, plotTop: top, plotBottom: bottom };
}

function powersOfTen(domain: [number, number]): number[] {
  const out: number[] = [];
  for (
    let p = Math.ceil(Math.log10(domain[0]) - 1e-9);
    p <= Math.floor(Math.log10(domain[1]) + 1e-9);
    p += 1
  ) {
    out.push(Math.pow(10, p));
  }
  return out;
}

function shortNumber(value: number): string {
  if (Math.abs(value) >= 1000) {
    return `${value / 1000}k`;
  }
  return String(Number(value.toPrecision(6)));
}

export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];
