export const HASH = "deadbeef12345678";

export function sweepCsv(opts: { methods?: string[]; seeds?: number[]; hash?: string } = {}): string {
  const methods = opts.methods ?? ["nid", "iid"];
  const seeds = opts.seeds ?? [0];
  const hash = opts.hash ?? HASH;
  const sigma2 = [1e-4, 1e-3, 1e-2, 1e-1, 1, 10];
  const header =
    "config_hash,manifold,density,method,sigma2,seed,status,ks,best_val_nll,sigma_lower_sq,sigma_lower,sigma_upper,wall_time_s,n_train,iterations,checkpoint";
  const lines = [header];
  for (const method of methods) {
    sigma2.forEach((s2, i) => {
      for (const seed of seeds) {
        const ks = method === "nid" ? 0.02 + 0.01 * i : 0.05 + 0.04 * i + 0.001 * seed;
        lines.push(
          `${hash},s1,vonmises,${method},${s2},${seed},ok,${ks},1.23,1e-5,3e-3,3.79,12.5,1000,200,checkpoints/x.flow`,
        );
      }
    });
  }
  return lines.join("\n") + "\n";
}

export function boundsJson(upper: number | "inf" = 3.79, hash = HASH): string {
  return JSON.stringify({
    config_hash: hash,
    sigma_lower_sq: 1e-5,
    sigma_lower_raw: 3e-3,
    sigma_upper: upper,
    n_samples: 10000,
    seed: 0,
  });
}

export function grid1dCsv(scale = 1.0, hash = HASH): string {
  const n = 64;
  const axis: number[] = [];
  const vals: number[] = [];
  for (let i = 0; i < n; i++) {
    const u = -1.5 + (3.0 * i) / (n - 1);
    axis.push(u);
    vals.push(scale * Math.exp(-4 * u * u));
  }
  return [`# infdef-grid-v1 d=1 config_hash=${hash}`, axis.join(","), vals.join(",")].join("\n") + "\n";
}

export function grid2dCsv(swap = false, hash = HASH): string {
  const n1 = 12;
  const n2 = 10;
  const a1: number[] = [];
  const a2: number[] = [];
  for (let i = 0; i < n1; i++) a1.push(i / (n1 - 1));
  for (let j = 0; j < n2; j++) a2.push((2 * j) / (n2 - 1));
  const rows: string[] = [`# infdef-grid-v1 d=2 config_hash=${hash}`, a1.join(","), a2.join(",")];
  for (let i = 0; i < n1; i++) {
    const row: number[] = [];
    for (let j = 0; j < n2; j++) {
      const v = Math.exp(-3 * ((a1[i] - 0.4) ** 2 + (a2[j] - (swap ? 1.4 : 0.6)) ** 2));
      row.push(v);
    }
    rows.push(row.join(","));
  }
  return rows.join("\n") + "\n";
}
