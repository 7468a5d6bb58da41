// Keyboard mapping. Pure: given a key and the current local mode flags,
// produce the command to send (or null for unmapped keys).

import { ViewModel } from "./viewmodel.js";

export function handleKey(key: string, vm: ViewModel): Record<string, unknown> | null {
  switch (key) {
    case "w":
    case "a":
    case "s":
    case "d":
      return { type: "move", dir: key };
    case "r": {
      vm.robustOn = !vm.robustOn;
      return { type: "set_robust", on: vm.robustOn };
    }
    case "p": {
      vm.pausedOn = !vm.pausedOn;
      return { type: vm.pausedOn ? "pause" : "resume" };
    }
    case "b":
      return { type: "request_batch_overlay" };
    default:
      return null;
  }
}
