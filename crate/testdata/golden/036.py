def trim(line):
    return line.lstrip().rstrip()
