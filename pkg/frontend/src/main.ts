// Browser bootstrap: binds the camera input, touch surface, and the view
// container to the controller. Mobile-first, thumb-reach layout.

import { BookVisClient } from "./api.js";
import { App, type Surface, type ViewModel } from "./app.js";
import { GestureRecognizer } from "./gestures.js";
import type { MatchEntry } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

class DomSurface implements Surface {
  private readonly frame = el<HTMLDivElement>("view-frame");
  private readonly img = el<HTMLImageElement>("view-svg");
  private readonly label = el<HTMLDivElement>("view-label");
  private readonly picker = el<HTMLDivElement>("picker");
  private readonly toast = el<HTMLDivElement>("toast");

  constructor(private readonly onPick: (bookId: string) => void) {}

  showView(model: ViewModel): void {
    document.body.style.background = model.background;
    this.frame.style.borderColor = model.accent;
    this.label.style.background = model.primary;
    this.label.style.color = model.textColor;
    this.label.textContent = model.view.replace(/_/g, " ");
    this.img.src = model.svgUrl;
    this.picker.hidden = true;
  }

  showPicker(matches: MatchEntry[]): void {
    this.picker.innerHTML = "";
    for (const match of matches) {
      const button = document.createElement("button");
      button.textContent = `${match.title ?? match.book_id} (${match.confidence.toFixed(2)})`;
      button.addEventListener("click", () => this.onPick(match.book_id));
      this.picker.appendChild(button);
    }
    this.picker.hidden = false;
  }

  showNoMatch(): void {
    this.flash("no match - try another angle");
  }

  showSaved(bookId: string): void {
    this.flash(`saved ${bookId}`);
  }

  showDetail(x: number, y: number): void {
    this.toast.style.left = `${x + 8}px`;
    this.toast.style.top = `${y - 24}px`;
  }

  private flash(message: string): void {
    this.toast.textContent = message;
    this.toast.hidden = false;
    setTimeout(() => { this.toast.hidden = true; }, 1800);
  }
}

function bootstrap(): void {
  const client = new BookVisClient("");
  const userId = localStorage.getItem("bookvis_user") ?? "demo-user";
  const surface = new DomSurface((bookId) => void app.selectBook(bookId));
  const app = new App(client, surface, userId);

  const recognizer = new GestureRecognizer((g) => void app.handleGesture(g));
  const stage = el<HTMLDivElement>("stage");
  stage.addEventListener("pointerdown", (e) =>
    recognizer.down({ x: e.clientX, y: e.clientY, t: e.timeStamp }));
  stage.addEventListener("pointermove", (e) =>
    recognizer.move({ x: e.clientX, y: e.clientY, t: e.timeStamp }));
  stage.addEventListener("pointerup", (e) =>
    recognizer.up({ x: e.clientX, y: e.clientY, t: e.timeStamp }));

  const input = el<HTMLInputElement>("capture");
  input.addEventListener("change", () => {
    const file = input.files?.[0];
    if (file) void app.captureAndRecognize(file);
  });
}

bootstrap();
