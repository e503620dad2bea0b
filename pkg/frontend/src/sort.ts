// Column sorting for the leaderboard table. Sorts are stable (ties keep
// their server order) and null metric values sink to the bottom either way.

export type SortDirection = "asc" | "desc";

export interface SortState {
  column: string;
  direction: SortDirection;
}

/** Next state after clicking a column header: first click sorts descending
 * (big scores first), a second click on the same column flips it. */
export function nextSortState(current: SortState | null, column: string): SortState {
  if (current && current.column === column) {
    return { column, direction: current.direction === "desc" ? "asc" : "desc" };
  }
  return { column, direction: "desc" };
}

export function sortRows<T>(
  rows: readonly T[],
  value: (row: T) => number | string | null,
  direction: SortDirection,
): T[] {
  const sign = direction === "asc" ? 1 : -1;
  return [...rows].sort((a, b) => {
    const va = value(a);
    const vb = value(b);
    if (va === null && vb === null) return 0;
    if (va === null) return 1; // nulls last regardless of direction
    if (vb === null) return -1;
    if (va < vb) return -sign;
    if (va > vb) return sign;
    return 0;
  });
}
