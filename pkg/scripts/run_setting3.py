"""Setting 3: group-specific mixtures of four basis functions, p = 10."""

from _common import parser, run_and_save

from clustree.bench import BenchmarkSpec

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[100, 500])
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--dgp", nargs="+", default=["mu1", "mu2", "mu3"])
    args = p.parse_args()
    spec = BenchmarkSpec(3, args.n, [args.K], dgp=args.dgp, replicates=args.replicates, seed=args.seed)
    run_and_save(spec, f"setting3_K{args.K}", args, "dgp")
