/** Angular geometry for display and brushing. The separation formula is the
 * same one the services use, so a brushed selection and the CONE predicate
 * it generates agree exactly. */

const DEG = Math.PI / 180;

export function separationDeg(ra1: number, dec1: number, ra2: number, dec2: number): number {
  const p1 = ra1 * DEG;
  const t1 = dec1 * DEG;
  const p2 = ra2 * DEG;
  const t2 = dec2 * DEG;
  const dp = p2 - p1;
  const num = Math.hypot(
    Math.cos(t2) * Math.sin(dp),
    Math.cos(t1) * Math.sin(t2) - Math.sin(t1) * Math.cos(t2) * Math.cos(dp),
  );
  const den = Math.sin(t1) * Math.sin(t2) + Math.cos(t1) * Math.cos(t2) * Math.cos(dp);
  return Math.atan2(num, den) / DEG;
}

export function normalizeRa(ra: number): number {
  let out = ra % 360;
  if (out < 0) out += 360;
  return out;
}

/** Format an angle for query text: plain decimal, at least one fractional
 * digit (10 -> "10.0"), at most six, trailing zeros trimmed. */
export function formatAngle(v: number): string {
  let s = v.toFixed(6).replace(/0+$/, "");
  if (s.endsWith(".")) s += "0";
  return s;
}

export function conePredicate(raDeg: number, decDeg: number, radiusDeg: number): string {
  return `CONE(${formatAngle(normalizeRa(raDeg))}, ${formatAngle(decDeg)}, ${formatAngle(radiusDeg)})`;
}

export interface SkyPoint {
  ra: number;
  dec: number;
}

/** Indices of points within the angular radius of the center -- the exact
 * membership a CONE predicate with the same parameters selects. */
export function pointsWithin(points: readonly SkyPoint[], center: SkyPoint, radiusDeg: number): number[] {
  const out: number[] = [];
  for (let i = 0; i < points.length; i++) {
    if (separationDeg(points[i].ra, points[i].dec, center.ra, center.dec) <= radiusDeg) {
      out.push(i);
    }
  }
  return out;
}
