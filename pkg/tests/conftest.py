import sys
from pathlib import Path

# Make `import oracles` work regardless of how pytest was invoked.
sys.path.insert(0, str(Path(__file__).parent))
