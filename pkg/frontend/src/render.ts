/** View layer: turns DesignerState into markup strings.
 *
 * Nothing here invents data — every image is embedded verbatim as the
 * base64 payload the server returned, every rect comes from a server-side
 * FurnitureInstance, and the floorplan panel is the server's own SVG.
 */

import { FurnitureIcon, DesignerState } from "./state";
import { Recommendation } from "./api";

/** Fixed perceptual color ramp (black-body style) for the heatmap overlay.
 * t in [0,1] -> CSS rgb() string. */
export function heatColor(t: number): string {
  const x = Math.min(1, Math.max(0, t));
  const r = Math.round(255 * Math.min(1, 2.5 * x));
  const g = Math.round(255 * Math.min(1, Math.max(0, 2.5 * x - 0.8)));
  const b = Math.round(255 * Math.min(1, Math.max(0, 5 * x - 4)));
  return `rgb(${r},${g},${b})`;
}

/** Activity overlay: the server's grayscale PNG is embedded verbatim as a
 * data URI; the color ramp is applied at paint time (CSS/canvas), so the
 * pixel data shown is exactly what the server returned. */
export function renderActivityOverlay(
  activityPngB64: string,
  opacity: number,
): string {
  const op = Math.min(1, Math.max(0, opacity));
  return (
    `<img class="activity-overlay" style="opacity:${op}" ` +
    `src="data:image/png;base64,${activityPngB64}" alt="activity map"/>`
  );
}

export function renderBoundary(boundaryPngB64: string): string {
  return (
    `<img class="boundary" src="data:image/png;base64,${boundaryPngB64}" ` +
    `alt="building boundary"/>`
  );
}

/** Furniture icons as SVG rects; room entrances behind a toggle. */
export function renderFurnitureIcons(
  icons: FurnitureIcon[],
  showEntrances = false,
): string {
  const parts: string[] = [];
  for (const icon of icons) {
    const r = icon.instance.rect;
    const cls = icon.dragging ? "furniture dragging" : "furniture";
    parts.push(
      `<rect class="${cls}" data-kind="${icon.instance.kind}" ` +
        `data-room="${icon.instance.roomId}" ` +
        `x="${r.x}" y="${r.y}" width="${r.w}" height="${r.h}"/>`,
    );
    if (showEntrances) {
      const [ex, ey] = icon.instance.entrance;
      parts.push(
        `<circle class="room-entrance" cx="${ex}" cy="${ey}" r="2"/>`,
      );
    }
  }
  return `<g class="furniture-layer">${parts.join("")}</g>`;
}

export function renderGallery(gallery: Recommendation[]): string {
  const cards = gallery.map(
    (e) =>
      `<figure class="gallery-card" data-id="${e.id}">` +
      `<img src="data:image/png;base64,${e.boundaryPng}" alt="${e.id}"/>` +
      `<figcaption>${e.id} (${e.distance.toFixed(3)})</figcaption></figure>`,
  );
  return `<div class="gallery">${cards.join("")}</div>`;
}

/** Side-by-side panels: activity heatmap overlay and generated floorplan. */
export function renderPanels(state: DesignerState, opacity = 0.7): string {
  const left =
    state.boundaryPng === null
      ? ""
      : renderBoundary(state.boundaryPng) +
        (state.activityOverlay === null
          ? ""
          : renderActivityOverlay(state.activityOverlay, opacity));
  const right = state.floorplan === null ? "" : state.floorplan.svg;
  const guidance =
    state.guidance === null
      ? ""
      : `<p class="guidance">${state.guidance}</p>`;
  return (
    `<div class="panels">` +
    `<section class="panel activity">${left}</section>` +
    `<section class="panel floorplan">${right}</section>` +
    `</div>${guidance}`
  );
}
