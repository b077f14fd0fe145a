import { writeFileSync } from "fs";
import { Resvg } from "@resvg/resvg-js";

/** Rasterize chart SVG to PNG bytes; the result is byte-deterministic. */
export function svgToPng(svg: string): Buffer {
  const resvg = new Resvg(svg, {
    background: "white",
    font: { loadSystemFonts: true, defaultFontFamily: "DejaVu Sans" },
  });
  return resvg.render().asPng();
}

export function writePng(svg: string, outPath: string): void {
  writeFileSync(outPath, svgToPng(svg));
}
