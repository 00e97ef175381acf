"""Entry point for python -m framemap.application.cli."""
if __name__ == "__main__":
    import sys

    from framemap.application.cli.main import main
    sys.exit(main())
