def slurp(word):
    handle = open(word)
    content = handle.read()
    handle.close()
    return content
