export { parseCsv, SchemaError } from "./csv.js";
export { plotFront, ellipsePoints } from "./front.js";
export type { Preference, FrontPlotOptions } from "./front.js";
export { plotCurves } from "./curves.js";
export { plotQq } from "./qq.js";
export { plotMcError } from "./mcerr.js";
