// UI state: the latest committed frame plus local toggles and camera.
// Everything the renderer draws comes from here, so replaying the same
// frames through a fresh view model reproduces the same scene.

import { Camera, defaultCamera } from "./geometry.js";
import { ServerFrame, SnapshotFrame, validateFrame } from "./schema.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface Toggles {
  groundTruth: boolean;
  batch: boolean;
  factorLabels: boolean;
}

export class ViewModel {
  frame: SnapshotFrame | null = null;
  status: ConnectionStatus = "connecting";
  banner: string | null = null;
  toggles: Toggles = { groundTruth: true, batch: true, factorLabels: true };
  camera: Camera = defaultCamera();
  // local echo of the toggled modes; the server acks but does not push them
  robustOn = false;
  pausedOn = false;

  /**
   * Apply one decoded frame. Snapshots older than the current one are
   * discarded (the stream may race a reconnect); invalid frames raise the
   * banner and leave the scene untouched. Returns true when the scene
   * changed.
   */
  apply(msg: unknown): boolean {
    const reason = validateFrame(msg);
    if (reason !== null) {
      this.banner = `bad frame: ${reason}`;
      return false;
    }
    const frame = msg as ServerFrame;
    if (frame.type === "error") {
      this.banner = frame.detail;
      return false;
    }
    if (frame.type === "ack") {
      // command confirmed; nothing to redraw
      return false;
    }
    if (this.frame !== null && frame.iteration < this.frame.iteration) {
      return false;
    }
    this.frame = frame;
    this.banner = null;
    return true;
  }
}
