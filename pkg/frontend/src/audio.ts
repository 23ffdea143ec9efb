/**
 * Audio capture and client-side transcoding.
 *
 * The server contract is fixed: 16 kHz, 16-bit linear PCM, mono WAV.
 * Browsers capture at their own rate (typically 44.1/48 kHz float), so the
 * recorder accumulates raw float frames and converts once at stop time.
 */

export const TARGET_SAMPLE_RATE = 16000;

/** Linear-interpolation resample; returns input unchanged for equal rates. */
export function downsample(input: Float32Array, fromRate: number, toRate: number): Float32Array {
    if (fromRate === toRate) return input;
    if (fromRate < toRate) throw new Error(`cannot upsample ${fromRate} -> ${toRate}`);
    const outLength = Math.floor((input.length * toRate) / fromRate);
    const out = new Float32Array(outLength);
    const step = fromRate / toRate;
    for (let i = 0; i < outLength; i++) {
        const pos = i * step;
        const i0 = Math.floor(pos);
        const i1 = Math.min(i0 + 1, input.length - 1);
        const frac = pos - i0;
        out[i] = input[i0] * (1 - frac) + input[i1] * frac;
    }
    return out;
}

export function encodeWavPcm16(samples: Float32Array, sampleRate: number): ArrayBuffer {
    const dataLength = samples.length * 2;
    const buffer = new ArrayBuffer(44 + dataLength);
    const view = new DataView(buffer);
    const writeAscii = (offset: number, text: string) => {
        for (let i = 0; i < text.length; i++) view.setUint8(offset + i, text.charCodeAt(i));
    };
    writeAscii(0, 'RIFF');
    view.setUint32(4, 36 + dataLength, true);
    writeAscii(8, 'WAVE');
    writeAscii(12, 'fmt ');
    view.setUint32(16, 16, true); // fmt chunk size
    view.setUint16(20, 1, true); // PCM
    view.setUint16(22, 1, true); // mono
    view.setUint32(24, sampleRate, true);
    view.setUint32(28, sampleRate * 2, true); // byte rate
    view.setUint16(32, 2, true); // block align
    view.setUint16(34, 16, true); // bits per sample
    writeAscii(36, 'data');
    view.setUint32(40, dataLength, true);
    for (let i = 0; i < samples.length; i++) {
        const s = Math.max(-1, Math.min(1, samples[i]));
        view.setInt16(44 + i * 2, s < 0 ? s * 0x8000 : s * 0x7fff, true);
    }
    return buffer;
}

/** Minimal WAV reader for tests and debugging; PCM16 mono only. */
export function decodeWavPcm16(buffer: ArrayBuffer): { sampleRate: number; samples: Int16Array } {
    const view = new DataView(buffer);
    const tag = (offset: number) =>
        String.fromCharCode(view.getUint8(offset), view.getUint8(offset + 1),
            view.getUint8(offset + 2), view.getUint8(offset + 3));
    if (tag(0) !== 'RIFF' || tag(8) !== 'WAVE') throw new Error('not a WAV file');
    if (view.getUint16(20, true) !== 1) throw new Error('not linear PCM');
    if (view.getUint16(22, true) !== 1) throw new Error('not mono');
    if (view.getUint16(34, true) !== 16) throw new Error('not 16-bit');
    const sampleRate = view.getUint32(24, true);
    const dataLength = view.getUint32(40, true);
    return { sampleRate, samples: new Int16Array(buffer, 44, dataLength / 2) };
}

export interface CaptureSource {
    /** Begin delivering float chunks at the source's native rate. */
    start(onChunk: (chunk: Float32Array, sampleRate: number) => void): Promise<void>;
    stop(): Promise<void>;
}

export class MicrophoneDeniedError extends Error {}

/** getUserMedia capture via an AudioContext tap. */
export class MicrophoneSource implements CaptureSource {
    private stream: MediaStream | null = null;
    private context: AudioContext | null = null;
    private node: ScriptProcessorNode | null = null;

    async start(onChunk: (chunk: Float32Array, sampleRate: number) => void): Promise<void> {
        try {
            this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
        } catch (err) {
            throw new MicrophoneDeniedError(`microphone unavailable: ${err}`);
        }
        this.context = new AudioContext();
        const source = this.context.createMediaStreamSource(this.stream);
        this.node = this.context.createScriptProcessor(4096, 1, 1);
        const rate = this.context.sampleRate;
        this.node.onaudioprocess = (event) => {
            onChunk(new Float32Array(event.inputBuffer.getChannelData(0)), rate);
        };
        source.connect(this.node);
        this.node.connect(this.context.destination);
    }

    async stop(): Promise<void> {
        this.node?.disconnect();
        this.stream?.getTracks().forEach((t) => t.stop());
        await this.context?.close();
        this.node = null;
        this.stream = null;
        this.context = null;
    }
}

/**
 * Records from a capture source and produces one PCM16 mono WAV at 16 kHz.
 * stop() pads with silence up to minDurationS so the recording always
 * covers the last logged event.
 */
export class Recorder {
    private chunks: Float32Array[] = [];
    private sourceRate = TARGET_SAMPLE_RATE;
    private recording = false;

    constructor(private readonly source: CaptureSource) {}

    async start(): Promise<void> {
        if (this.recording) throw new Error('already recording');
        this.chunks = [];
        this.recording = true;
        await this.source.start((chunk, rate) => {
            this.sourceRate = rate;
            this.chunks.push(chunk);
        });
    }

    async stop(minDurationS = 0): Promise<ArrayBuffer> {
        if (!this.recording) throw new Error('not recording');
        this.recording = false;
        await this.source.stop();

        let total = 0;
        for (const c of this.chunks) total += c.length;
        const joined = new Float32Array(total);
        let offset = 0;
        for (const c of this.chunks) {
            joined.set(c, offset);
            offset += c.length;
        }
        let samples = downsample(joined, this.sourceRate, TARGET_SAMPLE_RATE);
        const needed = Math.ceil(minDurationS * TARGET_SAMPLE_RATE) + 1;
        if (samples.length < needed) {
            const padded = new Float32Array(needed);
            padded.set(samples);
            samples = padded;
        }
        return encodeWavPcm16(samples, TARGET_SAMPLE_RATE);
    }
}
