# main.py
# ------------------------------------------------------------------
# PURPOSE:
# Script entry point; same commands as the installed `empathic-mftg`.
#
# USAGE EXAMPLES:
#   python main.py run --config scenarios/collision.json --log-level DEBUG
#   python main.py sweep --config scenarios/lq.json --parameter lam --grid 0:1:5
# ------------------------------------------------------------------

from empathic_mftg.cli import main

if __name__ == "__main__":
    main()
