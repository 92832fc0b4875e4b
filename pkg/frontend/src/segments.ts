// Live character/segment counter for the compose page.
//
// This is the one business rule the console re-implements client-side,
// and it must agree with the server's segmentation exactly: GSM-7 texts
// fit 160 septets in one SMS and 153 per concatenated part (extension
// table characters cost two septets); anything else is UCS-2 at 70/67
// UTF-16 code units. frontend/shared/segment-vectors.json pins both
// sides to the same answers.

const GSM7_BASE =
  '@£$¥èéùìòÇ\nØø\rÅåΔ_ΦΓΛΩΠΨΣΘΞÆæßÉ' +
  " !\"#¤%&'()*+,-./0123456789:;<=>?" +
  '¡ABCDEFGHIJKLMNOPQRSTUVWXYZÄÖÑÜ§' +
  '¿abcdefghijklmnopqrstuvwxyzäöñüà';

const GSM7_EXTENSION = '\f^{}\\[~]|€';

const baseSet = new Set(GSM7_BASE);
const extSet = new Set(GSM7_EXTENSION);

export interface SegmentCount {
  encoding: 'GSM7' | 'UCS2';
  units: number; // septets (GSM7) or UTF-16 code units (UCS2)
  segments: number;
  perSegment: number; // capacity of each part under the current mode
}

function septetCost(ch: string): number | null {
  if (baseSet.has(ch)) return 1;
  if (extSet.has(ch)) return 2;
  return null;
}

/** Code-point-wise costs; null when the text needs UCS-2. */
function gsmCosts(text: string): number[] | null {
  const costs: number[] = [];
  for (const ch of text) {
    const cost = septetCost(ch);
    if (cost === null) return null;
    costs.push(cost);
  }
  return costs;
}

function ucs2Costs(text: string): number[] {
  const costs: number[] = [];
  for (const ch of text) {
    costs.push(ch.length); // astral chars are surrogate pairs: 2 units
  }
  return costs;
}

function greedyParts(costs: number[], limit: number): number {
  let parts = 1;
  let used = 0;
  for (const cost of costs) {
    if (used + cost > limit) {
      parts += 1;
      used = cost;
    } else {
      used += cost;
    }
  }
  return parts;
}

export function countSegments(text: string): SegmentCount {
  const gsm = gsmCosts(text);
  const costs = gsm ?? ucs2Costs(text);
  const encoding: 'GSM7' | 'UCS2' = gsm ? 'GSM7' : 'UCS2';
  const [single, part] = gsm ? [160, 153] : [70, 67];
  const units = costs.reduce((a, b) => a + b, 0);
  if (units <= single) {
    return { encoding, units, segments: text.length === 0 ? 0 : 1, perSegment: single };
  }
  return { encoding, units, segments: greedyParts(costs, part), perSegment: part };
}

export function counterLabel(text: string): string {
  const count = countSegments(text);
  if (count.segments === 0) return '0 chars';
  const noun = count.segments === 1 ? 'segment' : 'segments';
  return `${count.units}/${count.segments === 1 ? count.perSegment : count.perSegment + '×' + count.segments} ${count.encoding} · ${count.segments} ${noun}`;
}
