/**
 * Batch renderer: reads one of the planner's CSV logs and writes an SVG.
 *
 *   node dist/src/cli.js front  <front_snapshots.csv> <out.svg> --instance 12
 *        [--pref-mean 90,6 --pref-cov 140,-2,-2,70]
 *   node dist/src/cli.js curves <aggregate.csv> <out.svg>
 *   node dist/src/cli.js qq     <qq_report.csv> <out.svg>
 *   node dist/src/cli.js mcerr  <mc_error.csv> <out.svg>
 */

import { readFileSync, writeFileSync } from "node:fs";
import { exit } from "node:process";

import { plotCurves } from "./curves.js";
import { plotFront, Preference } from "./front.js";
import { plotMcError } from "./mcerr.js";
import { plotQq } from "./qq.js";

function flagValue(args: string[], name: string): string | undefined {
  const index = args.indexOf(name);
  return index >= 0 ? args[index + 1] : undefined;
}

export function renderFromArgs(argv: string[]): string {
  const [kind, inputPath] = argv;
  if (!kind || !inputPath) {
    throw new Error("usage: <front|curves|qq|mcerr> <input.csv> <out.svg> [...]");
  }
  const text = readFileSync(inputPath, "utf8");
  switch (kind) {
    case "front": {
      const instance = Number(flagValue(argv, "--instance") ?? "1");
      const meanText = flagValue(argv, "--pref-mean");
      const covText = flagValue(argv, "--pref-cov");
      let preference: Preference | undefined;
      if (meanText && covText) {
        const mean = meanText.split(",").map(Number);
        const cov = covText.split(",").map(Number);
        preference = {
          mean: [mean[0], mean[1]],
          cov: [
            [cov[0], cov[1]],
            [cov[2], cov[3]],
          ],
        };
      }
      return plotFront(text, { instance, preference });
    }
    case "curves":
      return plotCurves(text);
    case "qq":
      return plotQq(text);
    case "mcerr":
      return plotMcError(text);
    default:
      throw new Error(`unknown figure kind '${kind}'`);
  }
}

function main(): void {
  const argv = process.argv.slice(2);
  const outPath = argv[2];
  try {
    const svg = renderFromArgs(argv);
    if (!outPath) {
      throw new Error("missing output path");
    }
    writeFileSync(outPath, svg);
    console.log(`wrote ${outPath}`);
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    exit(1);
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main();
}
