def upper_case(line):
    return ''.join(ch.upper() for ch in line)
