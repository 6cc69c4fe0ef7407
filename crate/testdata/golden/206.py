def raw_and_bytes():
    return [r'\d+', b'abc', rb'\x00', u'text', '']
