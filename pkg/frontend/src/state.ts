/** Designer session state and its user-facing operations.
 *
 * Invariants enforced here:
 *  - every furniture icon mirrors a server-side FurnitureInstance (state is
 *    always replaced wholesale from server responses; the only exception is
 *    the optimistic drag preview, which is rolled back on rejection);
 *  - the activity overlay is cleared whenever the server-side activity map
 *    becomes stale (any furniture mutation invalidates it);
 *  - at most one activity+generate round-trip is in flight per session;
 *    clicks arriving meanwhile coalesce into a single trailing run.
 */

import {
  ApiClient,
  ApiError,
  FurnitureInstance,
  GenerateResult,
  Recommendation,
  Rect,
  rectToList,
} from "./api";

export type Mode = "Auto" | "Manual";

export interface FurnitureIcon {
  instance: FurnitureInstance;
  dragging: boolean;
}

export interface Toast {
  level: "error" | "info";
  message: string;
}

export interface DesignerState {
  sessionId: string | null;
  boundaryPng: string | null; // base64, echo of what was uploaded
  icons: FurnitureIcon[];
  mode: Mode;
  /** base64 activity heatmap PNG, or null when the server copy is stale. */
  activityOverlay: string | null;
  floorplan: GenerateResult | null;
  gallery: Recommendation[];
  /** Inline guidance shown when the server rejects a generate (e.g. 422). */
  guidance: string | null;
  toasts: Toast[];
  generating: boolean;
}

function initialState(): DesignerState {
  return {
    sessionId: null,
    boundaryPng: null,
    icons: [],
    mode: "Manual",
    activityOverlay: null,
    floorplan: null,
    gallery: [],
    guidance: null,
    toasts: [],
    generating: false,
  };
}

function toIcons(furniture: FurnitureInstance[]): FurnitureIcon[] {
  return furniture.map((instance) => ({ instance, dragging: false }));
}

export class Designer {
  readonly state: DesignerState = initialState();

  private generatePending = false;
  private generateRunning: Promise<void> | null = null;

  constructor(private readonly api: ApiClient) {}

  /** Upload a boundary and open a session; loads the recommendation gallery. */
  async start(boundaryPngB64: string): Promise<void> {
    const sid = await this.api.createSession(boundaryPngB64);
    this.state.sessionId = sid;
    this.state.boundaryPng = boundaryPngB64;
    this.state.icons = [];
    this.state.activityOverlay = null;
    this.state.floorplan = null;
    this.state.gallery = await this.api.recommendations(sid);
  }

  setMode(mode: Mode): void {
    this.state.mode = mode;
  }

  get applyEnabled(): boolean {
    return this.state.gallery.length > 0;
  }

  private requireSession(): string {
    if (this.state.sessionId === null) {
      throw new Error("no active session");
    }
    return this.state.sessionId;
  }

  /** Server-side mutation invalidates the activity map; mirror that here. */
  private markActivityStale(): void {
    this.state.activityOverlay = null;
  }

  private toast(level: Toast["level"], message: string): void {
    this.state.toasts.push({ level, message });
  }

  async addFurniture(kind: string, rect: Rect): Promise<void> {
    const sid = this.requireSession();
    try {
      const furniture = await this.api.furniture(sid, {
        op: "add",
        kind,
        rect: rectToList(rect),
      });
      this.state.icons = toIcons(furniture);
      this.markActivityStale();
    } catch (e) {
      if (e instanceof ApiError) {
        this.toast("error", e.message);
        return;
      }
      throw e;
    }
  }

  /** Optimistic drag: the icon previews at the target immediately; a 409
   * from the server snaps it back to its last confirmed position. */
  async dragFurniture(roomId: number, target: Rect): Promise<void> {
    const sid = this.requireSession();
    const icon = this.state.icons.find((i) => i.instance.roomId === roomId);
    if (icon === undefined) {
      throw new Error(`no furniture icon for room ${roomId}`);
    }
    const previous = icon.instance.rect;
    icon.instance = { ...icon.instance, rect: target };
    icon.dragging = true;
    try {
      const furniture = await this.api.furniture(sid, {
        op: "move",
        room_id: roomId,
        rect: rectToList(target),
      });
      this.state.icons = toIcons(furniture);
      this.markActivityStale();
    } catch (e) {
      if (e instanceof ApiError) {
        // Snap back: restore the last server-confirmed rect.
        icon.instance = { ...icon.instance, rect: previous };
        icon.dragging = false;
        this.toast("error", e.message);
        return;
      }
      throw e;
    }
  }

  /** Right-click on an icon removes the piece. */
  async removeFurniture(roomId: number): Promise<void> {
    const sid = this.requireSession();
    try {
      const furniture = await this.api.furniture(sid, {
        op: "remove",
        room_id: roomId,
      });
      this.state.icons = toIcons(furniture);
      this.markActivityStale();
    } catch (e) {
      if (e instanceof ApiError) {
        this.toast("error", e.message);
        return;
      }
      throw e;
    }
  }

  /** Replace the session furniture with a gallery entry's adapted layout.
   * Disabled (no-op) while the gallery is empty. */
  async applyRecommendation(entryId: string): Promise<void> {
    if (!this.applyEnabled) {
      return;
    }
    const sid = this.requireSession();
    try {
      const furniture = await this.api.furniture(sid, {
        op: "apply",
        plan_id: entryId,
      });
      this.state.icons = toIcons(furniture);
      this.markActivityStale();
    } catch (e) {
      if (e instanceof ApiError) {
        this.toast("error", e.message);
        return;
      }
      throw e;
    }
  }

  /** Synthesize the activity map, then generate; refreshes both panels.
   *
   * Only one run is in flight per session. Calls made while a run is
   * active coalesce: exactly one trailing run starts after the current one
   * finishes, seeing the latest state. The returned promise resolves when
   * the state reflects a run started at or after the call.
   */
  synthesizeAndGenerate(seed = 0): Promise<void> {
    if (this.generateRunning !== null) {
      this.generatePending = true;
      return this.generateRunning.then(() => {
        // Chain onto whatever run the coalesced trigger started (if any).
        return this.generateRunning ?? Promise.resolve();
      });
    }
    const run = this.runGenerate(seed).finally(() => {
      this.generateRunning = null;
      if (this.generatePending) {
        this.generatePending = false;
        void this.synthesizeAndGenerate(seed);
      }
    });
    this.generateRunning = run;
    return run;
  }

  private async runGenerate(seed: number): Promise<void> {
    const sid = this.requireSession();
    this.state.generating = true;
    this.state.guidance = null;
    try {
      const activity = await this.api.synthesizeActivity(
        sid,
        this.state.mode,
        seed,
      );
      this.state.activityOverlay = activity.activityPng;
      const result = await this.api.generate(sid, seed);
      this.state.floorplan = result;
    } catch (e) {
      if (e instanceof ApiError) {
        if (e.status === 422) {
          // The server reported stale/unusable activity: clear the overlay
          // so nothing outdated stays on screen, and guide inline.
          this.state.activityOverlay = null;
          this.state.guidance = e.message;
        } else {
          this.toast("error", e.message);
        }
        return;
      }
      throw e;
    } finally {
      this.state.generating = false;
    }
  }
}
