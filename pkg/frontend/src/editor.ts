/** Inserting a brushed CONE(...) predicate into existing query text.
 *
 * The only "smart" text operation in the console: extend the WHERE clause
 * (or create one) without disturbing GROUP BY / ORDER BY / LIMIT. Works on
 * keyword boundaries outside string literals; the server remains the sole
 * authority on whether the result parses.
 */

interface ClausePos {
  whereStart: number | null; // index of the WHERE keyword
  whereExprStart: number | null; // index just after WHERE
  tailStart: number | null; // GROUP/ORDER/LIMIT start, or null
}

const TAIL_KEYWORDS = ["GROUP", "ORDER", "LIMIT"];

function scanClauses(text: string): ClausePos {
  const out: ClausePos = { whereStart: null, whereExprStart: null, tailStart: null };
  let i = 0;
  const n = text.length;
  let depth = 0;
  while (i < n) {
    const c = text[i];
    if (c === "'") {
      i++;
      while (i < n) {
        if (text[i] === "'") {
          if (text[i + 1] === "'") {
            i += 2;
            continue;
          }
          break;
        }
        i++;
      }
      i++;
      continue;
    }
    if (c === "(") depth++;
    if (c === ")") depth--;
    if (/[A-Za-z_]/.test(c)) {
      let j = i;
      while (j < n && /[A-Za-z0-9_]/.test(text[j])) j++;
      const word = text.slice(i, j).toUpperCase();
      if (depth === 0) {
        if (word === "WHERE" && out.whereStart === null) {
          out.whereStart = i;
          out.whereExprStart = j;
        }
        if (TAIL_KEYWORDS.includes(word) && out.tailStart === null && out.whereStart !== null) {
          out.tailStart = i;
        }
        if (TAIL_KEYWORDS.includes(word) && out.tailStart === null && out.whereStart === null) {
          out.tailStart = i;
        }
      }
      i = j;
      continue;
    }
    i++;
  }
  return out;
}

/** Add `predicate` to the query text's WHERE clause (creating one if absent),
 * parenthesizing the existing predicate to keep operator precedence. */
export function insertPredicate(text: string, predicate: string): string {
  const trimmed = text.replace(/\s+$/, "");
  if (!trimmed) {
    return predicate;
  }
  const pos = scanClauses(trimmed);
  if (pos.whereStart !== null && pos.whereExprStart !== null) {
    const exprEnd = pos.tailStart ?? trimmed.length;
    const expr = trimmed.slice(pos.whereExprStart, exprEnd).trim();
    const tail = pos.tailStart !== null ? " " + trimmed.slice(pos.tailStart).trim() : "";
    const head = trimmed.slice(0, pos.whereStart).replace(/\s+$/, "");
    return `${head} WHERE (${expr}) AND ${predicate}${tail}`;
  }
  if (pos.tailStart !== null) {
    const head = trimmed.slice(0, pos.tailStart).replace(/\s+$/, "");
    const tail = trimmed.slice(pos.tailStart).trim();
    return `${head} WHERE ${predicate} ${tail}`;
  }
  return `${trimmed} WHERE ${predicate}`;
}
