def duplicate(line):
    return ''.join([line] * 5)
