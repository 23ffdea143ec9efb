import { EventLog, validateEventLog } from './events';
import { Mode, UiEvent } from './types';

export interface ImageSize {
    width: number;
    height: number;
}

export interface ClickMark {
    x: number;
    y: number;
    t: number;
    typed: string;
    /** filled after finalize in main mode */
    resolvedClass?: string;
    alternatives?: string[];
}

export interface AnnotatorOptions {
    mode: Mode;
    imageSize: ImageSize;
    nowMs?: () => number;
    /** maps viewport coordinates to image pixel space */
    toImageCoords?: (clientX: number, clientY: number) => { x: number; y: number };
    /** minimum ms between recorded mouse_move events (default 20 = 50 Hz cap) */
    moveThrottleMs?: number;
}

export interface SubmitGate {
    ok: boolean;
    reason?: string;
}

/**
 * State machine for one image annotation: the event log, click markers,
 * the class-list overlay and the submit gate. Pointer geometry is injected
 * so the logic stays testable without layout.
 */
export class AnnotationSession {
    readonly log: EventLog;
    readonly marks: ClickMark[] = [];
    readonly mode: Mode;
    readonly imageSize: ImageSize;
    consultOpen = false;
    submitted = false;

    private readonly toImage: (x: number, y: number) => { x: number; y: number };
    private readonly moveThrottleMs: number;
    private lastMoveMs = -Infinity;
    private readonly nowMs: () => number;

    constructor(options: AnnotatorOptions) {
        this.mode = options.mode;
        this.imageSize = options.imageSize;
        this.nowMs = options.nowMs ?? (() => performance.now());
        this.log = new EventLog(this.nowMs);
        this.toImage = options.toImageCoords ?? ((x, y) => ({ x, y }));
        this.moveThrottleMs = options.moveThrottleMs ?? 20;
    }

    /** Call exactly when the image becomes visible; starts the shared clock. */
    imageShown(): void {
        this.log.start();
    }

    private clamp(p: { x: number; y: number }): { x: number; y: number } {
        return {
            x: Math.min(Math.max(Math.round(p.x), 0), this.imageSize.width),
            y: Math.min(Math.max(Math.round(p.y), 0), this.imageSize.height),
        };
    }

    pointerMoved(clientX: number, clientY: number): boolean {
        if (!this.log.started || this.submitted) return false;
        const now = this.nowMs();
        if (now - this.lastMoveMs < this.moveThrottleMs) return false;
        this.lastMoveMs = now;
        this.log.record('mouse_move', this.clamp(this.toImage(clientX, clientY)));
        return true;
    }

    clicked(clientX: number, clientY: number): ClickMark {
        if (!this.log.started || this.submitted) throw new Error('not annotating');
        const point = this.clamp(this.toImage(clientX, clientY));
        const event = this.log.record('click', point);
        const mark: ClickMark = { x: event.x!, y: event.y!, t: event.t, typed: '' };
        this.marks.push(mark);
        return mark;
    }

    setTyped(index: number, text: string): void {
        if (index < 0 || index >= this.marks.length) throw new Error('no such mark');
        this.marks[index].typed = text;
    }

    /** Removes the latest click (and its marker/typed box) before upload. */
    undoLastClick(): boolean {
        if (this.submitted || this.marks.length === 0) return false;
        if (!this.log.removeLastClick()) return false;
        this.marks.pop();
        return true;
    }

    keyPressed(): void {
        if (this.log.started && !this.submitted) this.log.record('key');
    }

    openClasses(): void {
        if (this.consultOpen || !this.log.started || this.submitted) return;
        this.consultOpen = true;
        this.log.record('show_classes_open');
    }

    closeClasses(): void {
        if (!this.consultOpen) return;
        this.consultOpen = false;
        this.log.record('show_classes_close');
    }

    /** Training mode blocks submit until every click has a typed name. */
    canSubmit(): SubmitGate {
        if (!this.log.started) return { ok: false, reason: 'image not shown yet' };
        if (this.submitted) return { ok: false, reason: 'already submitted' };
        if (this.consultOpen) return { ok: false, reason: 'close the class list first' };
        if (this.mode === 'training') {
            const missing = this.marks.filter((m) => m.typed.trim() === '').length;
            if (missing > 0) {
                return { ok: false, reason: `${missing} click(s) still need a typed name` };
            }
        }
        return { ok: true };
    }

    /** Records submit and returns the upload payload; validates first. */
    submit(): { events: string; lastEventT: number } {
        const gate = this.canSubmit();
        if (!gate.ok) throw new Error(gate.reason);
        this.log.record('submit');
        this.submitted = true;
        const check = validateEventLog(this.log.list(), this.imageSize);
        if (!check.ok) {
            throw new Error(`event log invalid: ${check.errors.join('; ')}`);
        }
        return { events: this.log.serialize(), lastEventT: this.log.lastEventT() };
    }

    events(): readonly UiEvent[] {
        return this.log.list();
    }

    typedEntries(): { text: string; x: number; y: number; t: number }[] {
        return this.marks.map((m) => ({ text: m.typed, x: m.x, y: m.y, t: m.t }));
    }
}

/** Default geometry: scale viewport coordinates by the element's layout. */
export function elementGeometry(element: HTMLElement, natural: ImageSize) {
    return (clientX: number, clientY: number): { x: number; y: number } => {
        const rect = element.getBoundingClientRect();
        if (rect.width === 0 || rect.height === 0) {
            return { x: clientX, y: clientY };
        }
        return {
            x: (clientX - rect.left) * (natural.width / rect.width),
            y: (clientY - rect.top) * (natural.height / rect.height),
        };
    };
}
