import { describe, expect, it } from "vitest";

import { escapeHtml, fmt2, fmtTimestamp, fullPrecision } from "../src/format";

describe("fmt2", () => {
  it("renders two decimals", () => {
    expect(fmt2(0.8049999)).toBe("0.80");
    expect(fmt2(1)).toBe("1.00");
    expect(fmt2(0.666)).toBe("0.67");
    expect(fmt2(0)).toBe("0.00");
  });

  it("renders missing values as n/a", () => {
    expect(fmt2(null)).toBe("n/a");
    expect(fmt2(undefined)).toBe("n/a");
  });
});

describe("fullPrecision", () => {
  it("keeps the service value verbatim for the hover title", () => {
    expect(fullPrecision(0.8049999)).toBe("0.8049999");
    expect(fullPrecision(1 / 3)).toBe(String(1 / 3));
    expect(fullPrecision(null)).toBe("not available");
  });
});

describe("fmtTimestamp", () => {
  it("drops the T separator and zone tail", () => {
    expect(fmtTimestamp("2026-08-14T09:30:00Z")).toBe("2026-08-14 09:30:00");
    expect(fmtTimestamp("2026-08-14T09:30:00.123456+00:00")).toBe("2026-08-14 09:30:00");
    expect(fmtTimestamp(null)).toBe("n/a");
  });
});

describe("escapeHtml", () => {
  it("neutralizes markup in service-provided names", () => {
    expect(escapeHtml('<img src=x onerror="x">&co')).toBe(
      "&lt;img src=x onerror=&quot;x&quot;&gt;&amp;co",
    );
  });
});
