import numpy as np, cv2
from skimage import data

def save(path, img):
    h, w = img.shape
    with open(path, 'wb') as f:
        f.write(b'P5\n%d %d\n255\n' % (w, h))
        f.write(img.astype(np.uint8).tobytes())

ys, xs = np.mgrid[0:64, 0:64]
gradient = ((xs * 2 + ys) // 3 + 40).clip(0, 255).astype(np.uint8)
rng = np.random.default_rng(2024)
noise = rng.normal(110, 25, size=(128, 128)).clip(0, 255).astype(np.uint8)
moon = data.moon()[180:255, 200:300].copy()   # 100x75, not a multiple of 8

clahe = cv2.createCLAHE(clipLimit=2.0, tileGridSize=(8, 8))
for name, img in [('gradient', gradient), ('noise', noise), ('moon', moon)]:
    save(f'{name}.pgm', img)
    save(f'{name}_clahe.pgm', clahe.apply(img))
    print(name, img.shape)
