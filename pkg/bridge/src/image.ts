import * as jpeg from "jpeg-js";
import { PNG } from "pngjs";

export interface DecodedImage {
  width: number;
  height: number;
  /** Tightly packed RGB, row major. */
  pixels: Uint8Array;
}

function stripAlpha(rgba: Uint8Array | Buffer, width: number, height: number): Uint8Array {
  const rgb = new Uint8Array(width * height * 3);
  for (let i = 0, j = 0; j < rgb.length; i += 4, j += 3) {
    rgb[j] = rgba[i];
    rgb[j + 1] = rgba[i + 1];
    rgb[j + 2] = rgba[i + 2];
  }
  return rgb;
}

/** Decode a PNG or JPEG buffer, sniffing the format from magic bytes. */
export function decodeImage(data: Buffer): DecodedImage {
  if (data.length >= 8 && data[0] === 0x89 && data[1] === 0x50 && data[2] === 0x4e && data[3] === 0x47) {
    const png = PNG.sync.read(data);
    return { width: png.width, height: png.height, pixels: stripAlpha(png.data, png.width, png.height) };
  }
  if (data.length >= 2 && data[0] === 0xff && data[1] === 0xd8) {
    const img = jpeg.decode(data, { useTArray: true, formatAsRGBA: true });
    return { width: img.width, height: img.height, pixels: stripAlpha(img.data, img.width, img.height) };
  }
  throw new Error("unsupported image format (expected PNG or JPEG)");
}
