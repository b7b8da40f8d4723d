/** Monotone colour maps: value 0 is white, the maximum value is darkest. */

export type Rgb = readonly [number, number, number];
export type ColormapName = "gray" | "heat";

export const COLORMAP_NAMES: ColormapName[] = ["gray", "heat"];

const DARKEST: Record<ColormapName, Rgb> = {
  gray: [0, 0, 0],
  heat: [103, 0, 13],
};

/** Map a normalized value in [0, 1] to a colour; out-of-range values clamp. */
export function colormap(name: ColormapName, v: number): Rgb {
  const t = Math.min(Math.max(v, 0), 1);
  const dark = DARKEST[name];
  return [
    Math.round(255 + (dark[0] - 255) * t),
    Math.round(255 + (dark[1] - 255) * t),
    Math.round(255 + (dark[2] - 255) * t),
  ];
}
