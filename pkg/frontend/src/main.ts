import { ApiClient, ApiError } from './api';
import { elementGeometry } from './annotator';
import { MicrophoneDeniedError, MicrophoneSource, Recorder } from './audio';
import { ImageFlow } from './flow';
import { ImageDescriptor, Mode, TrainingFinalizeResponse, VocabularyInfo } from './types';
import {
    applyLabelingToMarks,
    classListView,
    feedbackView,
    markerView,
    summaryView,
} from './views';

function $(id: string): HTMLElement {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
}

class App {
    private readonly api: ApiClient;
    private sessionId = '';
    private mode: Mode = 'main';
    private vocabulary: VocabularyInfo | null = null;
    private flow: ImageFlow | null = null;
    private overlay: HTMLElement | null = null;

    constructor() {
        const params = new URLSearchParams(window.location.search);
        this.api = new ApiClient(params.get('api') ?? '', params.get('token'));
    }

    async start(): Promise<void> {
        const params = new URLSearchParams(window.location.search);
        this.mode = (params.get('mode') as Mode) ?? 'main';
        const annotator = params.get('annotator') ?? `anon-${Date.now()}`;
        const info = await this.api.createSession(annotator, this.mode);
        this.sessionId = info.session_id;
        this.vocabulary = await this.api.vocabulary(info.vocabulary_id);
        $('mode-banner').textContent =
            this.mode === 'training'
                ? 'Training: click one object per class, say its name and type it.'
                : 'Click one object per class and say its name.';
        this.bindControls();
        if (info.image) {
            await this.showImage(info.image);
        } else {
            this.showMessage('No images assigned.');
        }
    }

    private bindControls(): void {
        $('show-classes').addEventListener('click', () => this.toggleClasses());
        $('undo').addEventListener('click', () => {
            if (this.flow?.annotation.undoLastClick()) this.renderMarks();
        });
        $('submit').addEventListener('click', () => void this.submit());
        document.addEventListener('keydown', () => this.flow?.annotation.keyPressed());
    }

    private async showImage(image: ImageDescriptor): Promise<void> {
        const img = $('image') as HTMLImageElement;
        $('feedback-area').replaceChildren();
        $('markers').replaceChildren();
        img.src = this.api.imageUrl(image.image_id);

        await new Promise<void>((resolve, reject) => {
            img.onload = () => resolve();
            img.onerror = () => reject(new Error(`failed to load ${image.image_id}`));
        });
        const natural = {
            width: image.width ?? img.naturalWidth,
            height: image.height ?? img.naturalHeight,
        };
        const recorder = new Recorder(new MicrophoneSource());
        this.flow = new ImageFlow(this.api, recorder, this.sessionId,
            { ...image, width: natural.width, height: natural.height },
            this.mode, { toImageCoords: elementGeometry(img, natural) });

        img.onmousemove = (e) => this.flow?.annotation.pointerMoved(e.clientX, e.clientY);
        img.onclick = (e) => {
            if (!this.flow || this.flow.annotation.submitted) return;
            this.flow.annotation.clicked(e.clientX, e.clientY);
            this.renderMarks();
            this.updateGate();
        };
        try {
            await this.flow.begin();
        } catch (err) {
            if (err instanceof MicrophoneDeniedError) {
                this.showMessage(
                    'Microphone access is required to annotate. Allow it and reload.');
                return;
            }
            throw err;
        }
        this.updateGate();
    }

    private renderMarks(): void {
        if (!this.flow) return;
        const img = $('image') as HTMLImageElement;
        const natural = this.flow.annotation.imageSize;
        const scale = {
            x: img.width ? img.width / natural.width : 1,
            y: img.height ? img.height / natural.height : 1,
        };
        const layer = $('markers');
        layer.replaceChildren();
        this.flow.annotation.marks.forEach((mark, i) => {
            const node = markerView(mark, i, scale);
            if (this.mode === 'training') {
                const input = document.createElement('input');
                input.placeholder = 'type what you said';
                input.value = mark.typed;
                input.addEventListener('input', () => {
                    this.flow?.annotation.setTyped(i, input.value);
                    this.updateGate();
                });
                node.appendChild(input);
            }
            layer.appendChild(node);
        });
    }

    private updateGate(): void {
        if (!this.flow) return;
        const gate = this.flow.annotation.canSubmit();
        const button = $('submit') as HTMLButtonElement;
        button.disabled = !gate.ok;
        button.title = gate.reason ?? '';
    }

    private toggleClasses(): void {
        if (!this.flow || !this.vocabulary) return;
        if (this.overlay) {
            this.flow.annotation.closeClasses();
            this.overlay.remove();
            this.overlay = null;
        } else {
            this.flow.annotation.openClasses();
            this.overlay = classListView(this.vocabulary, () => this.toggleClasses());
            document.body.appendChild(this.overlay);
        }
        this.updateGate();
    }

    private async submit(): Promise<void> {
        if (!this.flow) return;
        let response;
        try {
            response = await this.flow.finish();
        } catch (err) {
            if (err instanceof ApiError) {
                this.offerRetry(String(err));
                return;
            }
            throw err;
        }
        const area = $('feedback-area');
        if (this.mode === 'training') {
            const training = response as TrainingFinalizeResponse;
            area.replaceChildren(feedbackView(training.feedback, training.targets));
            const summary = await this.api.trainingSummaryIfComplete(this.sessionId);
            if (summary) {
                area.appendChild(summaryView(
                    summary,
                    () => { window.location.search = '?mode=main'; },
                    () => window.location.reload()));
            }
        } else if ('labeling' in response) {
            applyLabelingToMarks(this.flow.annotation.marks, response.labeling);
            this.renderMarks();
        }
        if (response.next_image) {
            const next = response.next_image;
            const button = document.createElement('button');
            button.textContent = 'Next image';
            button.addEventListener('click', () => void this.showImage(next));
            area.appendChild(button);
        } else {
            area.appendChild(document.createTextNode('All images done.'));
        }
    }

    private offerRetry(message: string): void {
        const area = $('feedback-area');
        area.replaceChildren(document.createTextNode(`Upload failed: ${message} `));
        const retry = document.createElement('button');
        retry.textContent = 'Retry upload';
        retry.addEventListener('click', () => void this.submit());
        area.appendChild(retry);
    }

    private showMessage(text: string): void {
        $('feedback-area').replaceChildren(document.createTextNode(text));
    }
}

new App().start().catch((err) => {
    document.body.textContent = `Startup failed: ${err}`;
});
