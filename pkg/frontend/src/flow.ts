import { AnnotationSession, AnnotatorOptions } from './annotator';
import { Recorder } from './audio';
import { ApiClient } from './api';
import { ImageDescriptor, MainFinalizeResponse, Mode, TrainingFinalizeResponse } from './types';

export type FinalizeResponse = MainFinalizeResponse | TrainingFinalizeResponse;

/**
 * One image from display to finalize. Recording starts together with
 * image_shown so audio and events share the t=0 clock; upload happens only
 * at submit, and a failed upload can be retried with the same local state.
 */
export class ImageFlow {
    readonly annotation: AnnotationSession;
    private payload: { events: string; lastEventT: number } | null = null;
    private wav: ArrayBuffer | null = null;

    constructor(
        private readonly api: ApiClient,
        private readonly recorder: Recorder,
        private readonly sessionId: string,
        private readonly image: ImageDescriptor,
        private readonly mode: Mode,
        options: Omit<AnnotatorOptions, 'mode' | 'imageSize'> = {},
    ) {
        if (image.width === null || image.height === null) {
            throw new Error(`image ${image.image_id} has unknown dimensions`);
        }
        this.annotation = new AnnotationSession({
            mode,
            imageSize: { width: image.width, height: image.height },
            ...options,
        });
    }

    /** Call when the image element has rendered and audio capture may begin. */
    async begin(): Promise<void> {
        await this.recorder.start();
        this.annotation.imageShown();
    }

    /**
     * Submit: freeze the log, stop the recording padded to cover the last
     * event, then upload and finalize. Safe to call again after an upload
     * failure; the frozen payloads are reused.
     */
    async finish(): Promise<FinalizeResponse> {
        if (this.payload === null) {
            this.payload = this.annotation.submit();
            this.wav = await this.recorder.stop(this.payload.lastEventT);
        }
        return this.uploadAndFinalize();
    }

    async uploadAndFinalize(): Promise<FinalizeResponse> {
        if (this.payload === null || this.wav === null) {
            throw new Error('nothing to upload; call finish() first');
        }
        const imageId = this.image.image_id;
        const dims = { width: this.image.width!, height: this.image.height! };
        await this.api.uploadEvents(this.sessionId, imageId, this.payload.events);
        await this.api.uploadAudio(this.sessionId, imageId, this.wav);
        if (this.mode === 'training') {
            return this.api.finalizeTraining(
                this.sessionId, imageId, this.annotation.typedEntries(), dims);
        }
        return this.api.finalizeMain(this.sessionId, imageId, dims);
    }
}
