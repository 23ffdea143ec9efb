import { EventKind, UiEvent } from './types';

/**
 * Event recorder with the session's shared clock: t=0 is when the image is
 * shown, which is also when audio capture starts. Timestamps are seconds
 * with millisecond resolution and never decrease.
 */
export class EventLog {
    private events: UiEvent[] = [];
    private startedAtMs: number | null = null;
    private lastT = 0;

    constructor(private readonly nowMs: () => number = () => performance.now()) {}

    get started(): boolean {
        return this.startedAtMs !== null;
    }

    /** Records image_shown at t=0 and starts the clock. */
    start(): void {
        if (this.startedAtMs !== null) throw new Error('log already started');
        this.startedAtMs = this.nowMs();
        this.events.push({ kind: 'image_shown', t: 0 });
        this.lastT = 0;
    }

    /** Seconds since image_shown, clamped to be non-decreasing. */
    elapsed(): number {
        if (this.startedAtMs === null) throw new Error('log not started');
        const t = Math.round(this.nowMs() - this.startedAtMs) / 1000;
        return Math.max(t, this.lastT);
    }

    record(kind: EventKind, coords?: { x: number; y: number }): UiEvent {
        const t = this.elapsed();
        const event: UiEvent = coords
            ? { kind, t, x: Math.round(coords.x), y: Math.round(coords.y) }
            : { kind, t };
        this.events.push(event);
        this.lastT = t;
        return event;
    }

    /**
     * Drops the most recent click from the buffer (marker undo). The log is
     * only uploaded at submit time, so an undone click simply never reaches
     * the backend; the surrounding mouse trace stays.
     */
    removeLastClick(): boolean {
        for (let i = this.events.length - 1; i >= 0; i--) {
            if (this.events[i].kind === 'click') {
                this.events.splice(i, 1);
                return true;
            }
        }
        return false;
    }

    lastEventT(): number {
        return this.lastT;
    }

    clickCount(): number {
        return this.events.filter((e) => e.kind === 'click').length;
    }

    list(): readonly UiEvent[] {
        return this.events;
    }

    /** Line-delimited JSON, one event per line, ready for upload. */
    serialize(): string {
        return this.events.map((e) => JSON.stringify(e)).join('\n') + '\n';
    }
}

export interface ValidationResult {
    ok: boolean;
    errors: string[];
}

/**
 * Client-side mirror of the backend event-log contract, used to check a log
 * before upload: image_shown first at t=0, submit last, non-decreasing
 * timestamps, integer in-bounds coordinates on click/mouse_move, balanced
 * show-classes pairs.
 */
export function validateEventLog(
    events: readonly UiEvent[],
    imageSize: { width: number; height: number },
): ValidationResult {
    const errors: string[] = [];
    if (events.length === 0) {
        return { ok: false, errors: ['empty event log'] };
    }
    if (events[0].kind !== 'image_shown' || events[0].t !== 0) {
        errors.push('first event must be image_shown at t=0');
    }
    if (events.filter((e) => e.kind === 'image_shown').length !== 1) {
        errors.push('exactly one image_shown required');
    }
    if (events[events.length - 1].kind !== 'submit') {
        errors.push('last event must be submit');
    }
    if (events.filter((e) => e.kind === 'submit').length !== 1) {
        errors.push('exactly one submit required');
    }
    let prev = -Infinity;
    let consultDepth = 0;
    events.forEach((e, i) => {
        if (e.t < prev) errors.push(`event ${i}: t decreases (${e.t} < ${prev})`);
        prev = e.t;
        if (e.kind === 'click' || e.kind === 'mouse_move') {
            if (e.x === undefined || e.y === undefined) {
                errors.push(`event ${i}: ${e.kind} without coordinates`);
            } else if (!Number.isInteger(e.x) || !Number.isInteger(e.y)) {
                errors.push(`event ${i}: non-integer coordinates`);
            } else if (e.x < 0 || e.x > imageSize.width || e.y < 0 || e.y > imageSize.height) {
                errors.push(`event ${i}: coordinates (${e.x},${e.y}) out of bounds`);
            }
        }
        if (e.kind === 'show_classes_open') {
            if (consultDepth > 0) errors.push(`event ${i}: nested show_classes_open`);
            consultDepth++;
        }
        if (e.kind === 'show_classes_close') {
            if (consultDepth === 0) errors.push(`event ${i}: close without open`);
            else consultDepth--;
        }
    });
    if (consultDepth !== 0) errors.push('show_classes_open without close');
    return { ok: errors.length === 0, errors };
}
