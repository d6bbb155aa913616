"""Setting 2: as setting 1 with an inverse-Wishart between-group covariance."""

from _common import parser, run_and_save

from clustree.bench import BenchmarkSpec

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[10, 40])
    p.add_argument("--K", type=int, nargs="+", default=[40, 10])
    p.add_argument("--sigma-alpha", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    args = p.parse_args()
    if len(args.n) != len(args.K):
        p.error("--n and --K pair up; give the same number of values")
    for n, K in zip(args.n, args.K):
        spec = BenchmarkSpec(2, [n], [K], sigma_alpha=args.sigma_alpha, replicates=args.replicates,
                             seed=args.seed)
        run_and_save(spec, f"setting2_n{n}_K{K}", args, "sigma_alpha")
