/** Minimal binary PPM (P6, 8-bit) decoder for the diff overlay and tests. */

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB triples, length = width * height * 3. */
  data: Uint8Array;
}

export function decodePpm(bytes: Uint8Array): RgbImage {
  let pos = 0;
  const fields: string[] = [];
  // header: magic, width, height, maxval separated by whitespace/comments
  while (fields.length < 4) {
    while (pos < bytes.length && isWhitespace(bytes[pos])) pos++;
    if (bytes[pos] === 0x23) {
      // '#' comment runs to end of line
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < bytes.length && !isWhitespace(bytes[pos])) pos++;
    fields.push(new TextDecoder().decode(bytes.subarray(start, pos)));
  }
  pos++; // single whitespace after maxval
  const [magic, widthText, heightText, maxvalText] = fields;
  if (magic !== "P6") throw new Error(`unsupported PPM magic '${magic}'`);
  const width = Number(widthText);
  const height = Number(heightText);
  if (Number(maxvalText) !== 255) throw new Error("only 8-bit PPM supported");
  const expected = width * height * 3;
  const data = bytes.subarray(pos, pos + expected);
  if (data.length !== expected) throw new Error("truncated PPM pixel data");
  return { width, height, data: new Uint8Array(data) };
}

function isWhitespace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}
