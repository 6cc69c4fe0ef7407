import os
import sys as system
from collections import OrderedDict, defaultdict
