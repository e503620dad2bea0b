// Display formatting. Tables show 2 decimals; the unrounded service value
// travels along as the hover title so nothing is lost to rounding.

export function fmt2(value: number | null | undefined): string {
  if (value === null || value === undefined) return "n/a";
  return value.toFixed(2);
}

/** Full-precision string for the hover title attribute. */
export function fullPrecision(value: number | null | undefined): string {
  if (value === null || value === undefined) return "not available";
  return String(value);
}

/** Service timestamps are ISO 8601; show date and time without the zone tail. */
export function fmtTimestamp(iso: string | null | undefined): string {
  if (!iso) return "n/a";
  return iso.replace("T", " ").replace(/(\.\d+)?(Z|[+-]\d\d:\d\d)$/, "");
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
