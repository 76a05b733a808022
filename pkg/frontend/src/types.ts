// Shapes of the bookvis HTTP API payloads the client consumes.

export interface MatchEntry {
  book_id: string;
  title?: string;
  score: number;
  confidence: number;
}

export interface RecognizeResponse {
  schema: string;
  matches: MatchEntry[];
  query_descriptors: number;
}

export interface PaletteColor {
  rgb: [number, number, number];
  mass: number;
  hex: string;
}

export interface ThemeSlots {
  primary: string;
  secondary: string;
  accent: string;
  background: string;
  text_on_primary: string;
}

export interface PaletteResponse {
  schema: string;
  book_id: string;
  colors: PaletteColor[];
  theme: ThemeSlots;
}

export interface TimelineTile {
  book_id: string | null;
  year: number | null;
  is_focus: boolean;
}

export interface TimelineResponse {
  schema: string;
  tiles: TimelineTile[];
  focus_index: number;
}

export interface FitBody {
  position: [number, number];
  fitness: number;
  contributing_genres: [string, number][];
  overlap: boolean;
}

export interface FitResponse {
  schema: string;
  user_id: string;
  book_id: string;
  fit: FitBody;
  svg: string;
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
}
