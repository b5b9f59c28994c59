int a = 9;
int main() {
  int r = 1;
  r = a % (3 - 1);
  printf("%d\n", r);
  return 0;
}
