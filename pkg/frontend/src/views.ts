import { ClickMark } from './annotator';
import { Feedback, Labeling, RoundSummary, Targets, VocabularyInfo } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function list(title: string, names: string[], className: string): HTMLElement {
    const box = el('div', `feedback-group ${className}`);
    box.appendChild(el('h4', undefined, title));
    const ul = el('ul');
    if (names.length === 0) {
        ul.appendChild(el('li', 'empty', 'none'));
    }
    for (const name of names) {
        ul.appendChild(el('li', undefined, name));
    }
    box.appendChild(ul);
    return box;
}

function pct(value: number | null): string {
    return value === null ? 'n/a' : `${(value * 100).toFixed(1)}%`;
}

/** Per-image training feedback: mistakes plus running totals vs targets. */
export function feedbackView(feedback: Feedback, targets: Targets): HTMLElement {
    const root = el('div', 'feedback');
    root.appendChild(list('Correct', feedback.correct, 'correct'));
    root.appendChild(list('Missed', feedback.missed, 'missed'));
    root.appendChild(list('Wrong label', feedback.wrong, 'wrong'));
    const running = el('p', 'running');
    running.textContent =
        `So far: recall ${pct(feedback.running_recall)} ` +
        `(target ${pct(targets.min_recall)}), ` +
        `precision ${pct(feedback.running_precision)} ` +
        `(target ${pct(targets.min_precision)})`;
    root.appendChild(running);
    return root;
}

/** Round verdict with a proceed action on pass, repeat-training on fail. */
export function summaryView(summary: RoundSummary, onProceed: () => void,
                            onRepeat: () => void): HTMLElement {
    const root = el('div', `summary ${summary.passed ? 'passed' : 'failed'}`);
    root.appendChild(el('h3', undefined,
        summary.passed ? 'Training passed' : 'Training not passed yet'));
    root.appendChild(el('p', undefined,
        `Round ${summary.round_index + 1}: recall ${pct(summary.recall)}, ` +
        `precision ${pct(summary.precision)} over ${summary.per_image.length} images`));
    const button = el('button', 'primary',
        summary.passed ? 'Continue to annotation' : 'Repeat training');
    button.addEventListener('click', summary.passed ? onProceed : onRepeat);
    root.appendChild(button);
    return root;
}

/** The Show-classes overlay: every class name with its symbol if present. */
export function classListView(vocabulary: VocabularyInfo, onClose: () => void): HTMLElement {
    const root = el('div', 'class-overlay');
    const close = el('button', 'close', 'Close');
    close.addEventListener('click', onClose);
    root.appendChild(close);
    root.appendChild(el('h3', undefined, `Classes (${vocabulary.classes.length})`));
    const grid = el('div', 'class-grid');
    for (const cls of vocabulary.classes) {
        const cell = el('div', 'class-cell');
        if (cls.symbol_uri) {
            const img = el('img');
            img.src = cls.symbol_uri;
            img.alt = cls.name;
            cell.appendChild(img);
        }
        cell.appendChild(el('span', undefined, cls.name));
        grid.appendChild(cell);
    }
    root.appendChild(grid);
    return root;
}

/** After finalize, markers show the resolved class and the alternatives. */
export function applyLabelingToMarks(marks: ClickMark[], labeling: Labeling): void {
    for (const label of labeling.labels) {
        const mark = marks.find((m) => m.x === label.x && m.y === label.y);
        if (mark) {
            mark.resolvedClass = label.class;
            mark.alternatives = label.alternatives;
        }
    }
}

export function markerView(mark: ClickMark, index: number,
                           scale: { x: number; y: number }): HTMLElement {
    const node = el('div', 'marker');
    node.style.left = `${mark.x * scale.x}px`;
    node.style.top = `${mark.y * scale.y}px`;
    node.appendChild(el('span', 'dot', String(index + 1)));
    if (mark.resolvedClass) {
        node.appendChild(el('span', 'label', mark.resolvedClass));
        if (mark.alternatives && mark.alternatives.length > 1) {
            node.appendChild(el('span', 'alternatives', mark.alternatives.join(' / ')));
        }
    }
    return node;
}
