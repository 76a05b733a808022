// Theming conformance: whatever the palette endpoint says is the law.
// Ten fixture covers' theme hexes must come through to the rendered view
// model untouched.

import { describe, expect, it } from "vitest";
import { BookVisClient } from "../src/api.js";
import { App, type Surface, type ViewModel } from "../src/app.js";
import type { MatchEntry, ThemeSlots } from "../src/types.js";

// ten fixture covers with distinct theme endpoints
const FIXTURE_THEMES: Record<string, ThemeSlots> = Object.fromEntries(
  Array.from({ length: 10 }, (_, i) => {
    const h = (40 + i * 17).toString(16).padStart(2, "0");
    return [`cover${i}`, {
      primary: `#${h}4a68`,
      secondary: `#8c${h}a0`,
      accent: `#d6${h}46`,
      background: `#f3f4${h}`,
      text_on_primary: i % 2 ? "#000000" : "#ffffff",
    }];
  }),
);

function clientFor(themes: Record<string, ThemeSlots>): BookVisClient {
  const fetchImpl = async (url: string): Promise<Response> => {
    const match = url.match(/\/api\/books\/([^/]+)\/palette/);
    if (match && themes[match[1]]) {
      return Response.json({
        schema: "bookvis/1", book_id: match[1],
        colors: [{ rgb: [1, 2, 3], mass: 1.0, hex: "#010203" }],
        theme: themes[match[1]],
      });
    }
    return Response.json({ status: 404, code: "not_found", message: url },
                         { status: 404 });
  };
  return new BookVisClient("", fetchImpl);
}

class LastView implements Surface {
  last: ViewModel | null = null;
  showView(model: ViewModel): void { this.last = model; }
  showPicker(_: MatchEntry[]): void {}
  showNoMatch(): void {}
  showSaved(_: string): void {}
  showDetail(_: number, __: number): void {}
}

describe("palette-driven theming", () => {
  it("view background and accent equal the endpoint hexes for 10 covers", async () => {
    const client = clientFor(FIXTURE_THEMES);
    for (const [bookId, theme] of Object.entries(FIXTURE_THEMES)) {
      const surface = new LastView();
      const app = new App(client, surface, "u1");
      await app.selectBook(bookId);
      const model = surface.last!;
      expect(model.background).toBe(theme.background);
      expect(model.accent).toBe(theme.accent);
      expect(model.primary).toBe(theme.primary);
      expect(model.textColor).toBe(theme.text_on_primary);
    }
  });

  it("theme persists across navigation within one book", async () => {
    const client = clientFor(FIXTURE_THEMES);
    const surface = new LastView();
    const app = new App(client, surface, "u1");
    await app.selectBook("cover3");
    const expected = FIXTURE_THEMES.cover3;
    for (const direction of ["up", "left", "down", "right"] as const) {
      await app.handleGesture({ kind: "swipe", direction });
      expect(surface.last!.background).toBe(expected.background);
      expect(surface.last!.accent).toBe(expected.accent);
    }
  });

  it("re-anchoring on another cover swaps the whole theme", async () => {
    const client = clientFor(FIXTURE_THEMES);
    const surface = new LastView();
    const app = new App(client, surface, "u1");
    await app.selectBook("cover0");
    const before = surface.last!.background;
    await app.selectBook("cover9");
    expect(surface.last!.background).toBe(FIXTURE_THEMES.cover9.background);
    expect(surface.last!.background).not.toBe(before);
  });
});
