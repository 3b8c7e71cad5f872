// Binary PGM (P5) reader for showing reference frames on a canvas.
// Strict subset: magic, two dimensions, maxval 255, one whitespace byte,
// then exactly width*height pixel bytes.

export interface GrayImage {
    width: number;
    height: number;
    pixels: Uint8Array;
}

function isSpace(byte: number): boolean {
    return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function decodePgm(buf: ArrayBuffer): GrayImage {
    const bytes = new Uint8Array(buf);
    if (bytes[0] !== 0x50 || bytes[1] !== 0x35) {
        throw new Error("not a P5 image");
    }
    let offset = 2;
    const fields: number[] = [];
    while (fields.length < 3) {
        while (offset < bytes.length && isSpace(bytes[offset])) {
            offset += 1;
        }
        let value = 0;
        let digits = 0;
        while (offset < bytes.length && bytes[offset] >= 0x30 && bytes[offset] <= 0x39) {
            value = value * 10 + (bytes[offset] - 0x30);
            digits += 1;
            offset += 1;
        }
        if (digits === 0) {
            throw new Error("truncated header");
        }
        fields.push(value);
    }
    if (offset >= bytes.length || !isSpace(bytes[offset])) {
        throw new Error("missing pixel separator");
    }
    offset += 1;
    const [width, height, maxval] = fields;
    if (maxval !== 255) {
        throw new Error(`unsupported maxval ${maxval}`);
    }
    const expected = width * height;
    if (bytes.length - offset !== expected) {
        throw new Error(`expected ${expected} pixel bytes, found ${bytes.length - offset}`);
    }
    return { width, height, pixels: bytes.slice(offset) };
}

// Expand grayscale to the RGBA layout canvas ImageData wants.
export function toRgba(image: GrayImage): Uint8ClampedArray {
    const out = new Uint8ClampedArray(image.width * image.height * 4);
    for (let i = 0; i < image.pixels.length; i++) {
        const v = image.pixels[i];
        out[i * 4] = v;
        out[i * 4 + 1] = v;
        out[i * 4 + 2] = v;
        out[i * 4 + 3] = 255;
    }
    return out;
}
