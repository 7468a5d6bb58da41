// Shared hand-written frame used across the unit tests.

export function sampleSnapshot(iteration = 5): any {
  return {
    type: "snapshot",
    schema_version: 1,
    iteration,
    seed: 3,
    variables: [
      {
        id: 0,
        label: "pose",
        mean: [0.1, -0.2],
        cov: [
          [0.01, 0],
          [0, 0.01],
        ],
        gt: [0, 0],
      },
      {
        id: 1,
        label: "landmark",
        mean: [2, 3],
        cov: [
          [0.04, 0.01],
          [0.01, 0.02],
        ],
      },
    ],
    factors: [
      { id: 10, var_ids: [0], kind: "anchor" },
      {
        id: 11,
        var_ids: [0, 1],
        kind: "relative",
        robust_class: "white",
        m_est: 7.3,
        m_gt: 9.1,
      },
    ],
    metrics: { messages_sent: 42, max_residual: 0.5 },
  };
}
