// The controller: capture -> recognize -> themed swipe navigation.
// DOM-free by design; main.ts plugs a real Surface and camera in.

import { BookVisClient } from "./api.js";
import type { Gesture, ViewName, ViewState } from "./state.js";
import { currentView, initialState, navigate } from "./state.js";
import type { MatchEntry, ThemeSlots } from "./types.js";

export const AUTO_SELECT_CONFIDENCE = 0.2;

export interface ViewModel {
  view: ViewName;
  svgUrl: string;
  bookId: string | null;
  background: string;
  accent: string;
  primary: string;
  textColor: string;
}

/** Everything the controller can make visible; implemented by the DOM shell
 * in main.ts and by plain recorders in tests. */
export interface Surface {
  showView(model: ViewModel): void;
  showPicker(matches: MatchEntry[]): void;
  showNoMatch(): void;
  showSaved(bookId: string): void;
  showDetail(x: number, y: number): void;
}

const NEUTRAL_THEME: ThemeSlots = {
  primary: "#4a5568",
  secondary: "#8c93a0",
  accent: "#d67e46",
  background: "#f3f4f6",
  text_on_primary: "#ffffff",
};

export class App {
  state: ViewState = initialState();
  theme: ThemeSlots = NEUTRAL_THEME;
  private captureToken = 0;
  private saving = false;

  constructor(private readonly client: BookVisClient,
              private readonly surface: Surface,
              private readonly userId: string) {}

  /** Photo taken or file picked: recognize and either jump straight to the
   * bookSelfie (confident top match), offer the top five, or admit defeat
   * with a retry affordance. A newer capture cancels the pending one. */
  async captureAndRecognize(image: Blob): Promise<void> {
    const token = ++this.captureToken;
    const result = await this.client.recognize(image);
    if (token !== this.captureToken) return; // superseded by a newer capture
    if (result.matches.length === 0) {
      this.surface.showNoMatch();
      return;
    }
    const top = result.matches[0];
    if (top.confidence >= AUTO_SELECT_CONFIDENCE) {
      await this.selectBook(top.book_id);
    } else {
      this.surface.showPicker(result.matches.slice(0, 5));
    }
  }

  /** Anchor the session on a book: adopt its cover theme and land on the
   * bookSelfie page. Also the handler for picker taps and timeline taps. */
  async selectBook(bookId: string): Promise<void> {
    const palette = await this.client.palette(bookId);
    this.theme = palette.theme;
    this.state = { group: "book_side", indexInGroup: 0, currentBook: bookId };
    this.render();
  }

  async handleGesture(gesture: Gesture): Promise<void> {
    switch (gesture.kind) {
      case "swipe": {
        this.state = navigate(this.state, gesture);
        this.render();
        return;
      }
      case "long_press": {
        // save the current book; one request per press, never per repeat
        if (!this.state.currentBook || this.saving) return;
        this.saving = true;
        try {
          await this.client.saveToShelf(this.userId, this.state.currentBook);
          this.surface.showSaved(this.state.currentBook);
        } finally {
          this.saving = false;
        }
        return;
      }
      case "tap": {
        // a tap on a timeline tile re-anchors the whole session on that book
        if (gesture.target && currentView(this.state) === "author_timeline") {
          await this.selectBook(gesture.target);
        }
        return;
      }
      case "drag": {
        this.surface.showDetail(gesture.x, gesture.y);
        return;
      }
      case "double_tap":
        return; // deliberately unbound
    }
  }

  viewModel(): ViewModel {
    const view = currentView(this.state);
    return {
      view,
      svgUrl: this.client.viewSvgUrl(view, this.state.currentBook, this.userId),
      bookId: this.state.currentBook,
      background: this.theme.background,
      accent: this.theme.accent,
      primary: this.theme.primary,
      textColor: this.theme.text_on_primary,
    };
  }

  private render(): void {
    this.surface.showView(this.viewModel());
  }
}
