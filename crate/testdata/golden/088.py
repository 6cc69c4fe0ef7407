def join_underscore(line):
    return line.replace(' ', '_')
