import argparse
import logging


def main() -> None:
    parser = argparse.ArgumentParser(description="Run the scoring sidecar.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8400)
    parser.add_argument(
        "--live",
        action="store_true",
        help="Also register live model scorers (checkpoints via QE_SIDECAR_* env vars).",
    )
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)

    import uvicorn

    from .app import create_app

    uvicorn.run(create_app(stub_mode=not args.live), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
