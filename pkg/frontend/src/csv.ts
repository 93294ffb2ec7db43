/**
 * Minimal CSV reader for the planner's log schemas.
 *
 * The writer side guarantees comma-free cells (plans are ';'-joined), so
 * parsing is a straight split. Columns are addressed by header name and a
 * missing column is a schema error that names it.
 */

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV document");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  for (const row of rows) {
    if (row.length !== header.length) {
      throw new SchemaError(
        `row has ${row.length} cells, header has ${header.length}`,
      );
    }
  }
  return { header, rows };
}

export function columnIndex(table: Table, name: string): number {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new SchemaError(`missing column '${name}'`);
  }
  return index;
}

export function numberColumn(table: Table, name: string): number[] {
  const index = columnIndex(table, name);
  return table.rows.map((row) => {
    const value = Number(row[index]);
    if (!Number.isFinite(value)) {
      throw new SchemaError(`non-numeric value '${row[index]}' in '${name}'`);
    }
    return value;
  });
}

export function stringColumn(table: Table, name: string): string[] {
  const index = columnIndex(table, name);
  return table.rows.map((row) => row[index]);
}

/** Column names matching a prefix, in numeric suffix order (mean_1, mean_2, ...). */
export function prefixedColumns(table: Table, prefix: string): string[] {
  return table.header
    .filter((name) => name.startsWith(prefix))
    .sort((a, b) => a.localeCompare(b, undefined, { numeric: true }));
}
