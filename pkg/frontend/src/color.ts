/** Reading-order color ramp: red for the first glyph through purple for the last. */

const RAMP_END_HUE = 280; // degrees; 0 = red, 280 = purple

export function orderColor(index: number, count: number): string {
  const t = count <= 1 ? 0 : index / (count - 1);
  return `hsl(${Math.round(t * RAMP_END_HUE)}, 90%, 55%)`;
}

export function orderColors(count: number): string[] {
  return Array.from({ length: count }, (_, i) => orderColor(i, count));
}
