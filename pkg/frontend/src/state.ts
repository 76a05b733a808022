// Two-group view navigation: book-side pages on one wing, user-side pages
// on the other. Horizontal swipes jump between the wings keeping the row,
// vertical swipes cycle the three pages of the current wing.

export type Group = "book_side" | "user_side";

export type ViewName =
  | "book_selfie"
  | "author_timeline"
  | "similar_grid"
  | "how_it_fits"
  | "data_selfie"
  | "my_rose";

export const VIEW_GROUPS: Record<Group, ViewName[]> = {
  book_side: ["book_selfie", "author_timeline", "similar_grid"],
  user_side: ["how_it_fits", "data_selfie", "my_rose"],
};

export const ALL_VIEWS: ViewName[] = [
  ...VIEW_GROUPS.book_side,
  ...VIEW_GROUPS.user_side,
];

export interface ViewState {
  group: Group;
  indexInGroup: number; // 0..2
  currentBook: string | null;
}

export type Gesture =
  | { kind: "swipe"; direction: "left" | "right" | "up" | "down" }
  | { kind: "tap"; target?: string }
  | { kind: "long_press" }
  | { kind: "drag"; x: number; y: number }
  | { kind: "double_tap" };

export function initialState(): ViewState {
  return { group: "book_side", indexInGroup: 0, currentBook: null };
}

export function currentView(state: ViewState): ViewName {
  return VIEW_GROUPS[state.group][state.indexInGroup];
}

function otherGroup(group: Group): Group {
  return group === "book_side" ? "user_side" : "book_side";
}

/** Pure navigation step; gestures that do not navigate return the input. */
export function navigate(state: ViewState, gesture: Gesture): ViewState {
  if (gesture.kind !== "swipe") {
    return state; // taps, drags, and long presses never change the page
  }
  const n = VIEW_GROUPS[state.group].length;
  switch (gesture.direction) {
    case "left":
    case "right":
      return { ...state, group: otherGroup(state.group) };
    case "up":
      return { ...state, indexInGroup: (state.indexInGroup + 1) % n };
    case "down":
      return { ...state, indexInGroup: (state.indexInGroup + n - 1) % n };
  }
}

/** The view a gesture would land on; used for transition animations. */
export function peekView(state: ViewState, gesture: Gesture): ViewName {
  return currentView(navigate(state, gesture));
}
