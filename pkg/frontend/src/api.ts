/** Typed client for the designer service's /v1 HTTP+JSON API.
 *
 * This module is the only place the frontend talks to the network; every
 * piece of rendered state upstream originates from a response returned here.
 */

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface FurnitureInstance {
  kind: string;
  rect: Rect;
  roomId: number;
  entrance: [number, number];
}

export interface Recommendation {
  id: string;
  distance: number;
  boundaryPng: string; // base64 PNG
  furniture: FurnitureInstance[];
}

export interface ActivityResult {
  activityPng: string; // base64 PNG
  seed: number;
}

export interface SuccessReport {
  ok: boolean;
  failed_conditions: string[];
}

export interface GenerateResult {
  categoryPng: string; // base64 PNG
  vectorJson: string;
  svg: string;
  success: SuccessReport;
}

export type FurnitureCommand =
  | { op: "add"; kind: string; rect: [number, number, number, number] }
  | { op: "move"; room_id: number; rect: [number, number, number, number] }
  | { op: "remove"; room_id: number }
  | { op: "apply"; plan_id: string };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function rectFromList(r: number[]): Rect {
  return { x: r[0], y: r[1], w: r[2], h: r[3] };
}

export function rectToList(r: Rect): [number, number, number, number] {
  return [r.x, r.y, r.w, r.h];
}

function instanceFromJson(d: any): FurnitureInstance {
  return {
    kind: d.kind,
    rect: rectFromList(d.rect),
    roomId: d.room_id,
    entrance: [d.entrance[0], d.entrance[1]],
  };
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<any> {
    const resp = await this.fetchImpl(`${this.baseUrl}/v1${path}`, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body.error ?? "Unknown", body.detail ?? "");
    }
    return body;
  }

  async createSession(boundaryPngB64: string): Promise<string> {
    const body = await this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ boundary_png: boundaryPngB64 }),
    });
    return body.session_id;
  }

  async recommendations(sessionId: string, top = 10): Promise<Recommendation[]> {
    const body = await this.request(
      `/sessions/${sessionId}/recommendations?top=${top}`,
    );
    return body.results.map((e: any) => ({
      id: e.id,
      distance: e.distance,
      boundaryPng: e.boundary_png,
      furniture: e.furniture.map(instanceFromJson),
    }));
  }

  /** Furniture mutation; resolves to the full server-side furniture list. */
  async furniture(
    sessionId: string,
    cmd: FurnitureCommand,
  ): Promise<FurnitureInstance[]> {
    const body = await this.request(`/sessions/${sessionId}/furniture`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(cmd),
    });
    return body.furniture.map(instanceFromJson);
  }

  async synthesizeActivity(
    sessionId: string,
    mode: "Auto" | "Manual",
    seed: number,
  ): Promise<ActivityResult> {
    const body = await this.request(
      `/sessions/${sessionId}/activity?mode=${mode}&seed=${seed}`,
      { method: "POST" },
    );
    return { activityPng: body.activity_png, seed: body.seed };
  }

  async generate(sessionId: string, seed: number): Promise<GenerateResult> {
    const body = await this.request(`/sessions/${sessionId}/generate?seed=${seed}`, {
      method: "POST",
    });
    return {
      categoryPng: body.category_png,
      vectorJson: body.vector,
      svg: body.svg,
      success: body.success,
    };
  }
}
