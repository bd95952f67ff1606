"""Allow ``python -m nashbo`` as an alternative to the console script."""

from nashbo.harness import main

if __name__ == "__main__":
    main()
