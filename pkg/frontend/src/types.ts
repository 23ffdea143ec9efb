export type Mode = 'main' | 'training';

export type EventKind =
    | 'image_shown'
    | 'click'
    | 'mouse_move'
    | 'key'
    | 'show_classes_open'
    | 'show_classes_close'
    | 'submit';

export interface UiEvent {
    kind: EventKind;
    t: number;
    x?: number;
    y?: number;
}

export interface ImageDescriptor {
    image_id: string;
    url: string;
    width: number | null;
    height: number | null;
}

export interface SessionInfo {
    session_id: string;
    mode: Mode;
    vocabulary_id: string;
    image: ImageDescriptor | null;
}

export interface VocabularyClass {
    name: string;
    symbol_uri?: string;
}

export interface VocabularyInfo {
    name: string;
    classes: VocabularyClass[];
}

export interface LabelEntry {
    class: string;
    x: number;
    y: number;
    t: number;
    method: 'exact' | 'embedding';
    alternatives: string[];
}

export interface Labeling {
    image_id: string;
    session_id: string;
    labels: LabelEntry[];
    flags: { duplicate: number; unlabeled: number };
}

export interface Feedback {
    correct: string[];
    missed: string[];
    wrong: string[];
    running_recall: number | null;
    running_precision: number | null;
}

export interface Targets {
    min_recall: number;
    min_precision: number;
}

export interface MainFinalizeResponse {
    labeling: Labeling;
    next_image: ImageDescriptor | null;
}

export interface TrainingFinalizeResponse {
    feedback: Feedback;
    targets: Targets;
    images_graded: number;
    next_image: ImageDescriptor | null;
}

export interface PerImageResult {
    image_id: string;
    missed: string[];
    wrong: string[];
    correct: string[];
}

export interface RoundSummary {
    annotator_id: string;
    round_index: number;
    per_image: PerImageResult[];
    recall: number;
    precision: number;
    passed: boolean;
}

export interface TypedEntry {
    text: string;
    x?: number;
    y?: number;
    t?: number;
}
