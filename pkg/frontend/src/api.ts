// Thin client over the bookvis HTTP API. Everything the UI knows about the
// backend goes through here; fetch is injectable for tests.

import type {
  FitResponse,
  PaletteResponse,
  RecognizeResponse,
  TimelineResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class BookVisClient {
  constructor(private readonly baseUrl: string = "",
              private readonly fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + url, init);
    const body = await res.json();
    if (!res.ok) {
      throw new Error(`${body.code ?? res.status}: ${body.message ?? "request failed"}`);
    }
    return body as T;
  }

  recognize(image: Blob, hints?: string[]): Promise<RecognizeResponse> {
    const form = new FormData();
    form.append("image", image, "capture.png");
    const query = hints && hints.length ? `?hints=${encodeURIComponent(hints.join(","))}` : "";
    return this.json<RecognizeResponse>(`/api/recognize${query}`,
                                        { method: "POST", body: form });
  }

  palette(bookId: string): Promise<PaletteResponse> {
    return this.json<PaletteResponse>(`/api/books/${bookId}/palette`);
  }

  timeline(bookId: string): Promise<TimelineResponse> {
    return this.json<TimelineResponse>(`/api/books/${bookId}/author-timeline.json`);
  }

  fit(userId: string, bookId: string): Promise<FitResponse> {
    return this.json<FitResponse>(`/api/users/${userId}/fit/${bookId}`);
  }

  saveToShelf(userId: string, bookId: string, shelf = "saved",
              rating?: number): Promise<void> {
    return this.json(`/api/users/${userId}/shelves/${shelf}/books`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(rating === undefined ? { book_id: bookId }
                                                : { book_id: bookId, rating }),
    });
  }

  /** URL of the server-rendered SVG for a view (cacheable by content hash). */
  viewSvgUrl(view: string, bookId: string | null, userId: string): string {
    switch (view) {
      case "book_selfie":
        return `${this.baseUrl}/api/books/${bookId}/selfie.svg`;
      case "author_timeline":
        return `${this.baseUrl}/api/books/${bookId}/author-timeline.svg`;
      case "similar_grid":
        return `${this.baseUrl}/api/books/${bookId}/similar-grid.svg`;
      case "data_selfie":
        return `${this.baseUrl}/api/users/${userId}/data-selfie.svg?book=${bookId ?? ""}`;
      case "how_it_fits":
        return `${this.baseUrl}/api/users/${userId}/fit/${bookId}.svg`;
      case "my_rose":
        return `${this.baseUrl}/api/users/${userId}/rose.svg?book=${bookId ?? ""}`;
      default:
        throw new Error(`unknown view ${view}`);
    }
  }
}
