/** Error offsets from the server are byte offsets into the UTF-8 query text;
 * turn them into a caret under the offending line. */

export interface CaretLayout {
  lineNo: number; // 0-based
  lineText: string;
  caret: number; // character column within lineText
}

const encoder = new TextEncoder();

export function byteOffsetToCharIndex(text: string, byteOffset: number): number {
  if (byteOffset <= 0) return 0;
  let bytes = 0;
  let i = 0;
  for (const ch of text) {
    const w = encoder.encode(ch).length;
    if (bytes + w > byteOffset) break;
    bytes += w;
    i += ch.length; // surrogate pairs advance by 2 UTF-16 units
    if (bytes >= byteOffset) break;
  }
  return i;
}

export function caretLayout(text: string, byteOffset: number): CaretLayout {
  const char = Math.min(byteOffsetToCharIndex(text, byteOffset), text.length);
  const before = text.slice(0, char);
  const lineStart = before.lastIndexOf("\n") + 1;
  let lineEnd = text.indexOf("\n", char);
  if (lineEnd < 0) lineEnd = text.length;
  const lineNo = (before.match(/\n/g) ?? []).length;
  return {
    lineNo,
    lineText: text.slice(lineStart, lineEnd),
    caret: char - lineStart,
  };
}

/** Two-line plain-text rendering: the offending line, then a caret under it. */
export function caretBlock(text: string, byteOffset: number): string {
  const { lineText, caret } = caretLayout(text, byteOffset);
  return `${lineText}\n${" ".repeat(caret)}^`;
}
