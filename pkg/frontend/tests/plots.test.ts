import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { columnIndex, parseCsv, SchemaError } from "../src/csv.js";
import { ellipsePoints, plotFront } from "../src/front.js";
import { plotCurves } from "../src/curves.js";
import { plotQq } from "../src/qq.js";
import { plotMcError } from "../src/mcerr.js";

const here = dirname(fileURLToPath(import.meta.url));
const testdata = join(here, "..", "..", "testdata");

function fixture(...parts: string[]): string {
  return readFileSync(join(testdata, ...parts), "utf8");
}

const ROVER_PREF = {
  mean: [90, 6] as [number, number],
  cov: [
    [140, -2],
    [-2, 70],
  ] as [[number, number], [number, number]],
};

test("csv parser reports missing columns by name", () => {
  const table = parseCsv("a,b\n1,2\n");
  assert.deepEqual(table.header, ["a", "b"]);
  assert.equal(columnIndex(table, "b"), 1);
  assert.throws(() => columnIndex(table, "zap"), /missing column 'zap'/);
});

test("csv parser rejects ragged rows", () => {
  assert.throws(() => parseCsv("a,b\n1\n"), SchemaError);
});

test("front renders true and estimated markers with ellipses", () => {
  const svg = plotFront(fixture("run", "front_snapshots.csv"), {
    instance: 12,
    preference: ROVER_PREF,
  });
  assert.ok(svg.startsWith("<svg"));
  assert.ok(svg.includes("true front"));
  assert.ok(svg.includes("estimated front"));
  assert.ok((svg.match(/<circle/g) ?? []).length > 3);
});

test("front re-render is byte-identical", () => {
  const text = fixture("run", "front_snapshots.csv");
  const a = plotFront(text, { instance: 12, preference: ROVER_PREF });
  const b = plotFront(text, { instance: 12, preference: ROVER_PREF });
  assert.equal(a, b);
});

test("front errors on a missing instance", () => {
  assert.throws(
    () => plotFront(fixture("run", "front_snapshots.csv"), { instance: 99999 }),
    SchemaError,
  );
});

test("front errors when the estimated front is absent", () => {
  const text = [
    "instance,point_index,is_true_front,plan,mean_1,mean_2,cov_1_1,cov_1_2,cov_2_2",
    "1,0,1,,10,20,1,0,1",
  ].join("\n");
  assert.throws(() => plotFront(text, { instance: 1 }), /estimated/);
});

test("preference ellipse stays centered and ordered by sigma", () => {
  const one = ellipsePoints(ROVER_PREF, 1);
  const two = ellipsePoints(ROVER_PREF, 2);
  const center = one.reduce(
    (acc, [x, y]) => [acc[0] + x / one.length, acc[1] + y / one.length],
    [0, 0],
  );
  assert.ok(Math.abs(center[0] - 90) < 1e-6);
  assert.ok(Math.abs(center[1] - 6) < 1e-6);
  for (let i = 0; i < one.length; i += 1) {
    const r1 = Math.hypot(one[i][0] - 90, one[i][1] - 6);
    const r2 = Math.hypot(two[i][0] - 90, two[i][1] - 6);
    assert.ok(r2 > r1);
  }
});

test("curves renders one legend entry per selector", () => {
  const svg = plotCurves(fixture("bench", "aggregate.csv"));
  for (const name of ["aif-medium", "uniform", "weights", "topsis"]) {
    assert.ok(svg.includes(`>${name}</text>`), `legend for ${name}`);
  }
  assert.ok(svg.includes("cumulative regret"));
  assert.ok(svg.includes("cumulative bias"));
});

test("curves re-render is byte-identical", () => {
  const text = fixture("bench", "aggregate.csv");
  assert.equal(plotCurves(text), plotCurves(text));
});

test("curves errors when a required column is missing", () => {
  const broken = fixture("bench", "aggregate.csv")
    .split("\n")
    .map((line) => line.split(",").slice(0, -1).join(","))
    .join("\n");
  assert.throws(() => plotCurves(broken), /cum_bias_std/);
});

test("qq renders one panel per coordinate with identity line", () => {
  const svg = plotQq(fixture("diag", "qq_report.csv"));
  for (let coord = 0; coord < 5; coord += 1) {
    assert.ok(svg.includes(`coordinate ${coord}`));
  }
  assert.ok(svg.includes("theoretical quantile"));
});

test("qq re-render is byte-identical", () => {
  const text = fixture("diag", "qq_report.csv");
  assert.equal(plotQq(text), plotQq(text));
});

test("mc error renders both series on a log axis", () => {
  const svg = plotMcError(fixture("diag", "mc_error.csv"));
  assert.ok(svg.includes("standard error"));
  assert.ok(svg.includes("percent error vs reference"));
  assert.ok(svg.includes("Monte Carlo samples"));
});

test("mc error re-render is byte-identical", () => {
  const text = fixture("diag", "mc_error.csv");
  assert.equal(plotMcError(text), plotMcError(text));
});

test("malformed reports are rejected", () => {
  assert.throws(() => plotQq("coordinate,bogus\n0,1\n"), SchemaError);
  assert.throws(() => plotMcError("n_s\n10\n"), SchemaError);
});
